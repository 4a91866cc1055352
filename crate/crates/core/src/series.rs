//! Truncated formal power series without constant term, over a pluggable
//! coefficient space, and the formal q-Borel/Laplace, dilation, Mahler and
//! deceleration operators acting on them.
//!
//! Exponents of `q` are carried as exact rationals and only turned into
//! floats when a coefficient is scaled.

use std::fmt::Debug;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::QError;
use crate::fourier::FourierFn;
use crate::qcore::QParams;

/// Tag naming the coefficient space of a series in serialized form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceTag {
    Scalar,
    Fourier,
}

/// Ring operations a coefficient space has to provide.
pub trait Coeff: Clone + Debug + PartialEq + Send + Sync {
    const TAG: SpaceTag;

    /// The zero element living in the same space as `self`.
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, c: Complex64) -> Self;
    /// Pointwise product (the product of the scalar space, or per grid point).
    fn mul(&self, other: &Self) -> Self;
    /// Norm used for error reporting: modulus, or the weighted sup norm.
    fn size(&self) -> f64;
    /// Largest pointwise distance to `other`.
    fn max_diff(&self, other: &Self) -> f64;
    fn same_space(&self, other: &Self) -> bool;
}

impl Coeff for Complex64 {
    const TAG: SpaceTag = SpaceTag::Scalar;

    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn scale(&self, c: Complex64) -> Self {
        self * c
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn size(&self) -> f64 {
        self.norm()
    }
    fn max_diff(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn same_space(&self, _other: &Self) -> bool {
        true
    }
}

/// `Σ_{n=1}^{N} a_n T^n`; index `n` of the series is `coeffs[n - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<C: Coeff> {
    zero: C,
    coeffs: Vec<C>,
}

impl<C: Coeff> TruncatedSeries<C> {
    /// Builds a series from `a_1..a_N`; `zero` fixes the coefficient space.
    pub fn new(zero: C, coeffs: Vec<C>) -> Result<Self, QError> {
        let zero = zero.zero_like();
        if let Some(bad) = coeffs.iter().position(|c| !c.same_space(&zero)) {
            return Err(QError::SpaceMismatch(format!("coefficient {} lives elsewhere", bad + 1)));
        }
        Ok(TruncatedSeries { zero, coeffs })
    }

    pub fn zeros(zero: C, order: usize) -> Self {
        let zero = zero.zero_like();
        TruncatedSeries { coeffs: vec![zero.clone(); order], zero }
    }

    /// A single term `c T^n` at truncation `order`.
    pub fn monomial(c: C, n: usize, order: usize) -> Self {
        let mut s = Self::zeros(c.clone(), order);
        if (1..=order).contains(&n) {
            s.coeffs[n - 1] = c;
        }
        s
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn zero(&self) -> &C {
        &self.zero
    }

    /// Coefficient of `T^n`; zero for `n = 0` or beyond the truncation.
    pub fn coeff(&self, n: usize) -> &C {
        if n == 0 || n > self.coeffs.len() {
            &self.zero
        } else {
            &self.coeffs[n - 1]
        }
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, n: usize, c: C) -> Result<(), QError> {
        if n == 0 || n > self.coeffs.len() {
            return Err(QError::OrderBudget { needed: n, given: self.coeffs.len() });
        }
        if !c.same_space(&self.zero) {
            return Err(QError::SpaceMismatch(format!("coefficient {n}")));
        }
        self.coeffs[n - 1] = c;
        Ok(())
    }

    /// Pads with zeros or drops terms so that the order becomes `order`.
    pub fn with_order(&self, order: usize) -> Self {
        let mut coeffs: Vec<C> = self.coeffs.iter().take(order).cloned().collect();
        coeffs.resize(order, self.zero.clone());
        TruncatedSeries { zero: self.zero.clone(), coeffs }
    }

    /// Applies `f(n, a_n)` to every coefficient.
    pub fn map_indexed(&self, f: impl Fn(usize, &C) -> C) -> Self {
        TruncatedSeries {
            zero: self.zero.clone(),
            coeffs: self.coeffs.iter().enumerate().map(|(i, c)| f(i + 1, c)).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&C, &C) -> C) -> Result<Self, QError> {
        if !self.zero.same_space(&other.zero) {
            return Err(QError::SpaceMismatch("series over different spaces".into()));
        }
        let order = self.order().max(other.order());
        let coeffs = (1..=order).map(|n| f(self.coeff(n), other.coeff(n))).collect();
        Ok(TruncatedSeries { zero: self.zero.clone(), coeffs })
    }

    pub fn add(&self, other: &Self) -> Result<Self, QError> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, QError> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map_indexed(|_, a| a.scale(c))
    }

    /// Largest coefficientwise distance, relative to `1 + |a_n|`.
    pub fn max_rel_diff(&self, other: &Self) -> f64 {
        let order = self.order().max(other.order());
        (1..=order)
            .map(|n| {
                let (a, b) = (self.coeff(n), other.coeff(n));
                a.max_diff(b) / (1.0 + a.size().max(b.size()))
            })
            .fold(0.0, f64::max)
    }
}

impl TruncatedSeries<Complex64> {
    pub fn from_scalars(coeffs: Vec<Complex64>) -> Self {
        TruncatedSeries { zero: Complex64::new(0.0, 0.0), coeffs }
    }

    pub fn from_reals(coeffs: &[f64]) -> Self {
        Self::from_scalars(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Horner evaluation at a plane point.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| (acc + c) * z)
    }
}

impl TruncatedSeries<FourierFn> {
    /// Evaluates `Σ a_n(m) z^n` on the grid, giving a function of `m`.
    pub fn eval(&self, z: Complex64) -> FourierFn {
        let mut acc = self.zero.clone();
        for c in self.coeffs.iter().rev() {
            acc = acc.add(c).scale(z);
        }
        acc
    }
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct SeriesJson<C> {
    N: usize,
    space: SpaceTag,
    coeffs: Vec<C>,
}

impl<C: Coeff + Serialize> Serialize for TruncatedSeries<C> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SeriesJson { N: self.order(), space: C::TAG, coeffs: self.coeffs.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries<Complex64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = SeriesJson::<Complex64>::deserialize(d)?;
        check_raw(&raw).map_err(serde::de::Error::custom)?;
        Ok(TruncatedSeries::from_scalars(raw.coeffs))
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries<FourierFn> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = SeriesJson::<FourierFn>::deserialize(d)?;
        check_raw(&raw).map_err(serde::de::Error::custom)?;
        let first = raw
            .coeffs
            .first()
            .cloned()
            .ok_or_else(|| serde::de::Error::custom("a Fourier series needs at least one coefficient"))?;
        TruncatedSeries::new(first, raw.coeffs).map_err(serde::de::Error::custom)
    }
}

fn check_raw<C: Coeff + DeserializeOwned>(raw: &SeriesJson<C>) -> Result<(), String> {
    if raw.space != C::TAG {
        return Err(format!("expected space {:?}, found {:?}", C::TAG, raw.space));
    }
    if raw.N != raw.coeffs.len() {
        return Err(format!("N = {} but {} coefficients", raw.N, raw.coeffs.len()));
    }
    Ok(())
}

/// `n(n-1)/(2k)`, the exponent of `q` attached to `T^n` by the q-Borel transform.
pub fn borel_exponent(n: usize, k: u32) -> Rational64 {
    let n = n as i64;
    Rational64::new(n * (n - 1), 2 * k as i64)
}

/// `n(n-1)/(2k) - pn(pn-1)/(2k)`, the exponent of the deceleration factor.
pub fn deceleration_exponent(n: usize, p: u32, k: u32) -> Rational64 {
    borel_exponent(n, k) - borel_exponent(p as usize * n, k)
}

/// `a_n ↦ a_n / q^{n(n-1)/(2k)}`.
pub fn formal_q_borel<C: Coeff>(u: &TruncatedSeries<C>, params: &QParams) -> TruncatedSeries<C> {
    u.map_indexed(|n, a| a.scale((1.0 / params.qpow(borel_exponent(n, params.k()))).into()))
}

/// `a_n ↦ a_n q^{n(n-1)/(2k)}`, the coefficientwise inverse of [`formal_q_borel`].
pub fn formal_q_laplace<C: Coeff>(w: &TruncatedSeries<C>, params: &QParams) -> TruncatedSeries<C> {
    w.map_indexed(|n, a| a.scale(params.qpow(borel_exponent(n, params.k())).into()))
}

/// `t^σ U(q^j t)` truncated at `target`: `a_n` moves to `n + σ` with factor `q^{jn}`.
pub fn apply_t_sigma<C: Coeff>(
    u: &TruncatedSeries<C>,
    sigma: usize,
    j: Rational64,
    target: usize,
    params: &QParams,
) -> TruncatedSeries<C> {
    let mut out = TruncatedSeries::zeros(u.zero().clone(), target);
    for n in 1..=u.order() {
        let to = n + sigma;
        if to > target {
            break;
        }
        let f = params.qpow(j * Rational64::from_integer(n as i64));
        out.coeffs[to - 1] = u.coeff(n).scale(f.into());
    }
    out
}

/// `U(T) ↦ U(T^p)` truncated at `target`.
pub fn mahler<C: Coeff>(u: &TruncatedSeries<C>, p: u32, target: usize) -> Result<TruncatedSeries<C>, QError> {
    if p < 2 {
        return Err(QError::BadMahlerPower(p));
    }
    let mut out = TruncatedSeries::zeros(u.zero().clone(), target);
    for n in 1..=u.order() {
        let to = p as usize * n;
        if to > target {
            break;
        }
        out.coeffs[to - 1] = u.coeff(n).clone();
    }
    Ok(out)
}

/// Formal q-deceleration: `f_n ↦ f_n q^{n(n-1)/(2k)} / q^{pn(pn-1)/(2k)}`, powers unchanged.
pub fn formal_deceleration<C: Coeff>(
    f: &TruncatedSeries<C>,
    p: u32,
    params: &QParams,
) -> Result<TruncatedSeries<C>, QError> {
    if p < 2 {
        return Err(QError::BadMahlerPower(p));
    }
    Ok(f.map_indexed(|n, a| a.scale(params.qpow(deceleration_exponent(n, p, params.k())).into())))
}

/// Outcome of comparing both sides of a formal identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    /// Exponents of `q` agree as rationals for every index.
    pub exponents_exact: bool,
    /// Largest relative coefficient discrepancy.
    pub max_rel_error: f64,
    pub equal: bool,
}

/// Compares `B̂(T^σ σ^j U)` with `ξ^σ / q^{σ(σ-1)/(2k)} · σ^{j-σ/k} B̂(U)`.
pub fn borel_commutation_check<C: Coeff>(
    u: &TruncatedSeries<C>,
    sigma: usize,
    j: u32,
    params: &QParams,
) -> IdentityCheck {
    let k = params.k();
    let target = u.order() + sigma;
    let j_r = Rational64::from_integer(j as i64);
    let shift = j_r - Rational64::new(sigma as i64, k as i64);

    let lhs = formal_q_borel(&apply_t_sigma(u, sigma, j_r, target, params), params);
    let rhs = apply_t_sigma(&formal_q_borel(u, params), sigma, shift, target, params)
        .scale((1.0 / params.qpow(borel_exponent(sigma, k))).into());

    let exponents_exact = (1..=u.order()).all(|n| {
        let nr = Rational64::from_integer(n as i64);
        let left = j_r * nr - borel_exponent(n + sigma, k);
        let right = -borel_exponent(sigma, k) + shift * nr - borel_exponent(n, k);
        left == right
    });
    let max_rel_error = lhs.max_rel_diff(&rhs);
    IdentityCheck { exponents_exact, max_rel_error, equal: exponents_exact && max_rel_error <= params.eps_rel() }
}

/// Compares `B̂(U(T^p))(ξ)` with `D̂_p(B̂ U)(ξ^p)`.
pub fn mahler_deceleration_check<C: Coeff>(
    u: &TruncatedSeries<C>,
    p: u32,
    params: &QParams,
) -> Result<IdentityCheck, QError> {
    let k = params.k();
    let target = p as usize * u.order();
    let lhs = formal_q_borel(&mahler(u, p, target)?, params);
    let rhs = mahler(&formal_deceleration(&formal_q_borel(u, params), p, params)?, p, target)?;
    let exponents_exact = (1..=u.order())
        .all(|n| -borel_exponent(p as usize * n, k) == -borel_exponent(n, k) + deceleration_exponent(n, p, k));
    let max_rel_error = lhs.max_rel_diff(&rhs);
    Ok(IdentityCheck { exponents_exact, max_rel_error, equal: exponents_exact && max_rel_error <= params.eps_rel() })
}
