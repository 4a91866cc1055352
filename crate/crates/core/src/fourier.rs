//! The coefficient space `E_(β,μ)` as functions of `m` sampled on a
//! symmetric uniform grid, with its weighted sup norm, convolution,
//! inverse Fourier evaluation on the strip `|Im z| < β`, and the norms of
//! power series with such coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::QError;
use crate::qcore::{CoveringPoint, QParams};
use crate::series::{Coeff, SpaceTag, TruncatedSeries};

/// Minimum number of grid points of [`Grid::default_for`].
pub const MIN_GRID_POINTS: usize = 2000;

/// Symmetric uniform grid `m_i = (i - half) · step`, `i = 0..=2·half`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half: usize,
    step: f64,
}

impl Grid {
    /// Grid on `[-m_max, m_max]`; `m_max` must be a multiple of `step`.
    pub fn new(m_max: f64, step: f64) -> Result<Self, QError> {
        if !(step > 0.0 && m_max > 0.0 && step.is_finite() && m_max.is_finite()) {
            return Err(QError::InvalidGrid(format!("M={m_max}, step={step}")));
        }
        let half = (m_max / step).round();
        if ((half * step) - m_max).abs() > 1e-9 * m_max || half < 1.0 {
            return Err(QError::InvalidGrid(format!("M={m_max} is not a multiple of step={step}")));
        }
        Ok(Grid { half: half as usize, step })
    }

    pub fn from_half(half: usize, step: f64) -> Result<Self, QError> {
        Grid::new(half as f64 * step, step)
    }

    /// `M = 40/β` and at least [`MIN_GRID_POINTS`] points.
    pub fn default_for(beta: f64) -> Result<Self, QError> {
        let m_max = 40.0 / beta;
        let half = MIN_GRID_POINTS / 2;
        Grid::new(m_max, m_max / half as f64)
    }

    /// Same extent, half the step.
    pub fn refined(&self) -> Grid {
        Grid { half: 2 * self.half, step: self.step / 2.0 }
    }

    pub fn len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn m_max(&self) -> f64 {
        self.half as f64 * self.step
    }

    pub fn point(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == 2 * self.half {
            0.5 * self.step
        } else {
            self.step
        }
    }
}

/// A sampled element of `E_(β,μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFn {
    grid: Grid,
    beta: f64,
    mu: f64,
    values: Vec<Complex64>,
}

/// The weight `(1+|m|)^μ e^{β|m|}`.
pub fn weight(m: f64, beta: f64, mu: f64) -> f64 {
    (1.0 + m.abs()).powf(mu) * (beta * m.abs()).exp()
}

impl FourierFn {
    pub fn new(grid: Grid, beta: f64, mu: f64, values: Vec<Complex64>) -> Result<Self, QError> {
        if values.len() != grid.len() {
            return Err(QError::InvalidGrid(format!("{} values for {} points", values.len(), grid.len())));
        }
        if !(beta > 0.0 && mu > 1.0) {
            return Err(QError::InvalidGrid(format!("need beta > 0 and mu > 1, got {beta}, {mu}")));
        }
        Ok(FourierFn { grid, beta, mu, values })
    }

    pub fn from_fn(grid: Grid, beta: f64, mu: f64, f: impl Fn(f64) -> Complex64) -> Result<Self, QError> {
        let values = grid.points().map(f).collect();
        FourierFn::new(grid, beta, mu, values)
    }

    pub fn zeros(grid: Grid, beta: f64, mu: f64) -> Result<Self, QError> {
        FourierFn::new(grid, beta, mu, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    /// Linear interpolation between grid nodes, zero outside `[-M, M]`.
    pub fn eval(&self, m: f64) -> Complex64 {
        let x = m / self.grid.step + self.grid.half as f64;
        if x < 0.0 || x > (self.grid.len() - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i = x.floor() as usize;
        if i + 1 >= self.grid.len() {
            return self.values[self.grid.len() - 1];
        }
        let t = x - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Multiplies by `g(m)` pointwise.
    pub fn mul_fn(&self, g: impl Fn(f64) -> Complex64) -> FourierFn {
        let values = self.values.iter().enumerate().map(|(i, v)| v * g(self.grid.point(i))).collect();
        FourierFn { values, ..self.clone() }
    }

    /// Resamples onto another grid by linear interpolation.
    pub fn resample(&self, grid: Grid) -> FourierFn {
        let values = grid.points().map(|m| self.eval(m)).collect();
        FourierFn { grid, beta: self.beta, mu: self.mu, values }
    }

    fn check_grid(&self, other: &FourierFn) -> Result<(), QError> {
        if self.grid != other.grid {
            return Err(QError::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// Trapezoid rule for `∫ f(m) dm` over the grid.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().enumerate().map(|(i, v)| v * self.grid.weight(i)).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,re,im\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.grid.point(i), v.re, v.im));
        }
        out
    }
}

impl Coeff for FourierFn {
    const TAG: SpaceTag = SpaceTag::Fourier;

    fn zero_like(&self) -> Self {
        FourierFn { values: vec![Complex64::new(0.0, 0.0); self.values.len()], ..self.clone() }
    }
    fn add(&self, other: &Self) -> Self {
        debug_assert!(self.grid == other.grid);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        FourierFn { values, ..self.clone() }
    }
    fn sub(&self, other: &Self) -> Self {
        debug_assert!(self.grid == other.grid);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        FourierFn { values, ..self.clone() }
    }
    fn scale(&self, c: Complex64) -> Self {
        FourierFn { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }
    fn mul(&self, other: &Self) -> Self {
        debug_assert!(self.grid == other.grid);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        FourierFn { values, ..self.clone() }
    }
    fn size(&self) -> f64 {
        enorm(self)
    }
    fn max_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
    fn same_space(&self, other: &Self) -> bool {
        self.grid == other.grid && self.beta == other.beta && self.mu == other.mu
    }
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct FourierJson {
    M: f64,
    step: f64,
    beta: f64,
    mu: f64,
    values: Vec<[f64; 2]>,
}

impl Serialize for FourierFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FourierJson {
            M: self.grid.m_max(),
            step: self.grid.step,
            beta: self.beta,
            mu: self.mu,
            values: self.values.iter().map(|v| [v.re, v.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = FourierJson::deserialize(d)?;
        let grid = Grid::new(raw.M, raw.step).map_err(serde::de::Error::custom)?;
        let values = raw.values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        FourierFn::new(grid, raw.beta, raw.mu, values).map_err(serde::de::Error::custom)
    }
}

/// `sup_i (1+|m_i|)^μ e^{β|m_i|} |f(m_i)|`.
pub fn enorm(f: &FourierFn) -> f64 {
    f.values.iter().enumerate().map(|(i, v)| weight(f.grid.point(i), f.beta, f.mu) * v.norm()).fold(0.0, f64::max)
}

/// `(h ⋆ g)(m) = ∫ h(m - m₁) g(m₁) dm₁` by the trapezoid rule on the shared grid.
///
/// On a uniform symmetric grid every `m - m₁` is itself a node, so the
/// linear interpolation of `h` reduces to a lookup; outside `[-M, M]` it is zero.
pub fn convolve(h: &FourierFn, g: &FourierFn) -> Result<FourierFn, QError> {
    h.check_grid(g)?;
    let grid = h.grid;
    let n = grid.len();
    let half = grid.half as isize;
    let gw: Vec<Complex64> = g.values.iter().enumerate().map(|(j, v)| v * grid.weight(j)).collect();
    let values: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let i = i as isize;
            let lo = (i - half).max(0);
            let hi = (i + half).min(n as isize - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in lo..=hi {
                acc += h.values[(i - j + half) as usize] * gw[j as usize];
            }
            acc
        })
        .collect();
    Ok(FourierFn { grid, beta: h.beta, mu: h.mu, values })
}

/// `F⁻¹(f)(z) = (2π)^{-1/2} ∫ f(m) e^{imz} dm` for `|Im z| ≤ β' < β`.
pub fn inverse_fourier_eval(f: &FourierFn, z: Complex64, beta_prime: f64) -> Result<Complex64, QError> {
    if !(beta_prime < f.beta) || z.im.abs() > beta_prime {
        return Err(QError::StripViolation { im: z.im, beta: f.beta });
    }
    let i = Complex64::i();
    let sum: Complex64 =
        f.values.iter().enumerate().map(|(idx, v)| v * (i * f.grid.point(idx) * z).exp() * f.grid.weight(idx)).sum();
    Ok(sum / (2.0 * PI).sqrt())
}

/// `Σ_p ‖W_p‖_(β,μ) R^p`.
pub fn series_norm_1r(w: &TruncatedSeries<FourierFn>, r: f64) -> f64 {
    w.coeffs().iter().enumerate().map(|(i, c)| enorm(c) * r.powi(i as i32 + 1)).sum()
}

/// Both series norms of a Borel-plane function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesNormReport {
    pub norm_1r: f64,
    pub norm_kabm: Option<f64>,
    pub r: f64,
    pub alpha: f64,
}

/// Discrete sector norm
/// `sup (1+|m|)^μ e^{β|m|} |τ|^{-1} exp(-k log²|τ|/(2 log q) - α log|τ|) |ω(τ,m)|`
/// over samples with `|τ| ≥ R`.
pub fn series_norm_sector(samples: &[(CoveringPoint, FourierFn)], alpha: f64, r: f64, params: &QParams) -> f64 {
    let rate = params.gauss_rate();
    samples
        .iter()
        .filter(|(tau, _)| tau.r() >= r)
        .map(|(tau, f)| {
            let l = tau.r().ln();
            enorm(f) * (-rate * l * l - alpha * l).exp() / tau.r()
        })
        .fold(0.0, f64::max)
}

/// `sup_m (1+|m|)^{μ-α} ∫ dm₁ / ((1+|m-m₁|)^μ (1+|m₁|)^{μ-deg B})` on a grid.
pub fn convolution_weight_bound(mu: f64, alpha: f64, deg_b: u32, grid: &Grid) -> f64 {
    let n = grid.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let m = grid.point(i);
            let integral: f64 = (0..n)
                .map(|j| {
                    let m1 = grid.point(j);
                    grid.weight(j) / ((1.0 + (m - m1).abs()).powf(mu) * (1.0 + m1.abs()).powf(mu - deg_b as f64))
                })
                .sum();
            (1.0 + m.abs()).powf(mu - alpha) * integral
        })
        .reduce(|| 0.0, f64::max)
}
