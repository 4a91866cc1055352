//! Borel-plane fixed point: the affine operator `H₁` on truncated series
//! with `E_(β,μ)` coefficients, Picard iteration with measured contraction,
//! and assembly of the formal solution `Û(t,m)` and its coefficients `u_p(z)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::QError;
use crate::fourier::{convolve, enorm, inverse_fourier_eval, series_norm_1r, FourierFn};
use crate::geometry::{inv_pm_taylor_grid, pm_taylor, MahlerTerm, ProblemSpec, SectorConfig};
use crate::qcore::{q_factorial, QParams};
use crate::series::{borel_exponent, deceleration_exponent, formal_q_laplace, Coeff, TruncatedSeries};

/// How the Picard loop treats a growing step norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// Fail with `NoContraction` after three consecutive ratios above one.
    #[default]
    Contraction,
    /// Keep iterating; the operator is strictly triangular in the order, so
    /// the truncation is exact after at most `N` steps.
    Triangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub order: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub mode: SolveMode,
}

impl SolverSettings {
    pub fn new(order: usize) -> Self {
        SolverSettings { order, tol: 1e-12, max_iter: order + 8, mode: SolveMode::Contraction }
    }
}

/// Result of the Picard iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorelSolution {
    pub omega: TruncatedSeries<FourierFn>,
    /// Index of the returned iterate `ω_n` (`ω_0 = 0`).
    pub iterations: usize,
    /// `‖ω_{n+1} - ω_n‖ / ‖ω_n - ω_{n-1}‖` in the `(1,R)` norm.
    pub contraction_history: Vec<f64>,
    /// `‖ω - H₁(ω)‖_(1,R)` at the returned iterate.
    pub residual_1r: f64,
    pub norm_history: Vec<f64>,
    /// `(1,R)` mass of Mahler contributions beyond the truncation order.
    pub dropped_mass: f64,
    pub mode: SolveMode,
    /// Set when the step norm grew for three consecutive steps.
    pub contraction_lost: bool,
}

/// `H₁` prepared for one problem at one truncation order.
pub struct H1Operator<'a> {
    spec: &'a ProblemSpec,
    order: usize,
    r: f64,
    inv_p: Vec<FourierFn>,
    forcing: TruncatedSeries<FourierFn>,
    r_symbols: Vec<FourierFn>,
}

impl<'a> H1Operator<'a> {
    pub fn new(spec: &'a ProblemSpec, config: &SectorConfig, order: usize) -> Result<Self, QError> {
        spec.validate()?;
        let zero = spec.zero_fn();
        let mut forcing = TruncatedSeries::zeros(zero.clone(), order);
        for f in &spec.forcing {
            if (f.j as usize) <= order {
                let prev = forcing.coeff(f.j as usize).clone();
                forcing.set_coeff(f.j as usize, prev.add(&f.f))?;
            }
        }
        let r_symbols = spec.terms.iter().map(|t| spec.symbol_fn(&t.r)).collect();
        Ok(H1Operator { spec, order, r: config.r, inv_p: inv_pm_taylor_grid(spec, order)?, forcing, r_symbols })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Taylor coefficients `f_0..f_N` of `1/P_m` as functions of `m`.
    pub fn inverse_symbol(&self) -> &[FourierFn] {
        &self.inv_p
    }

    /// `(2π)^{-1/2} A_ℓ ⋆ (c · R_ℓ(i·))`.
    pub fn term_convolution(&self, idx: usize, c: &FourierFn) -> Result<FourierFn, QError> {
        let t = &self.spec.terms[idx];
        Ok(convolve(&t.a, &c.mul(&self.r_symbols[idx]))?.scale((1.0 / (2.0 * PI).sqrt()).into()))
    }

    /// The bracket of the Borel-plane equation, before division by `P_m`,
    /// together with the dropped `(1,R)` mass beyond order `N`.
    pub fn rhs(&self, omega: &TruncatedSeries<FourierFn>) -> Result<(TruncatedSeries<FourierFn>, f64), QError> {
        let params = &self.spec.params;
        let n_max = self.order;
        let mut s = self.forcing.clone();
        let mut dropped = 0.0;
        for (idx, t) in self.spec.terms.iter().enumerate() {
            let shift = t.borel_shift(params.k());
            let pre = t.borel_prefactor(params);
            for n in 1..=omega.order().min(n_max) {
                let a = omega.coeff(n);
                if a.values().iter().all(|v| v.norm() == 0.0) {
                    continue;
                }
                let pow = n + t.l0 as usize;
                let (target, factor) = term_target(t, pow, n, shift, pre, params);
                let c = self.term_convolution(idx, a)?.scale(factor.into());
                if target > n_max {
                    dropped += enorm(&c) * self.r.powi(target as i32);
                } else {
                    let prev = s.coeff(target).clone();
                    s.set_coeff(target, prev.add(&c))?;
                }
            }
        }
        Ok((s, dropped))
    }

    /// `H₁(ω)` truncated at `N`.
    pub fn apply(&self, omega: &TruncatedSeries<FourierFn>) -> Result<TruncatedSeries<FourierFn>, QError> {
        self.apply_with_drop(omega).map(|(s, _)| s)
    }

    pub fn apply_with_drop(
        &self,
        omega: &TruncatedSeries<FourierFn>,
    ) -> Result<(TruncatedSeries<FourierFn>, f64), QError> {
        let (s, dropped) = self.rhs(omega)?;
        Ok((times_inverse_symbol(&self.inv_p, &s), dropped))
    }
}

/// Where the `n`-th coefficient of `ω` lands after the term's τ-operators, and the scalar factor.
fn term_target(t: &MahlerTerm, pow: usize, n: usize, shift: Rational64, pre: f64, params: &QParams) -> (usize, f64) {
    let mut factor = pre * params.qpow(shift * Rational64::from_integer(n as i64));
    let mut target = pow;
    if t.l2 >= 2 {
        factor *= params.qpow(deceleration_exponent(pow, t.l2, params.k()));
        target = t.l2 as usize * pow;
    }
    (target, factor)
}

/// `(Σ_i f_i τ^i) · S(τ)` truncated at the order of `S`.
pub fn times_inverse_symbol(inv_p: &[FourierFn], s: &TruncatedSeries<FourierFn>) -> TruncatedSeries<FourierFn> {
    let order = s.order();
    let coeffs = (1..=order)
        .map(|p| {
            let mut acc = s.zero().clone();
            for i in 0..p {
                let sp = s.coeff(p - i);
                if i < inv_p.len() {
                    acc = acc.add(&inv_p[i].mul(sp));
                }
            }
            acc
        })
        .collect();
    TruncatedSeries::new(s.zero().clone(), coeffs).expect("same space")
}

/// Picard iteration `ω ← H₁(ω)` from `ω = 0`.
pub fn solve_fixed_point(
    spec: &ProblemSpec,
    config: &SectorConfig,
    settings: &SolverSettings,
) -> Result<BorelSolution, QError> {
    let op = H1Operator::new(spec, config, settings.order)?;
    solve_with(&op, config.r, settings)
}

pub fn solve_with(op: &H1Operator<'_>, r: f64, settings: &SolverSettings) -> Result<BorelSolution, QError> {
    let mut omega = TruncatedSeries::zeros(op.spec.zero_fn(), op.order);
    let mut history = Vec::new();
    let mut norms = vec![0.0];
    let mut prev_delta: Option<f64> = None;
    let mut growth_run = 0;
    let mut contraction_lost = false;
    for n in 0..settings.max_iter.max(1) {
        let (next, dropped) = op.apply_with_drop(&omega)?;
        let delta = series_norm_1r(&next.sub(&omega)?, r);
        if let Some(pd) = prev_delta {
            if pd > 0.0 {
                let ratio = delta / pd;
                history.push(ratio);
                growth_run = if ratio > 1.0 { growth_run + 1 } else { 0 };
                if growth_run >= 3 {
                    contraction_lost = true;
                    if settings.mode == SolveMode::Contraction {
                        return Err(QError::NoContraction { ratios: history });
                    }
                }
            }
        }
        let norm = series_norm_1r(&omega, r);
        if delta <= settings.tol * (1.0 + norm) {
            return Ok(BorelSolution {
                omega,
                iterations: n,
                contraction_history: history,
                residual_1r: delta,
                norm_history: norms,
                dropped_mass: dropped,
                mode: settings.mode,
                contraction_lost,
            });
        }
        prev_delta = Some(delta);
        omega = next;
        norms.push(series_norm_1r(&omega, r));
    }
    Err(QError::NoContraction { ratios: history })
}

/// `U_p = ω_p q^{p(p-1)/(2k)}`.
pub fn assemble_u_hat_series(sol: &BorelSolution, params: &QParams) -> TruncatedSeries<FourierFn> {
    formal_q_laplace(&sol.omega, params)
}

/// Table `u_p(z) = F⁻¹(U_p)(z)`, one row per `p`.
pub fn assemble_u_hat(
    u: &TruncatedSeries<FourierFn>,
    z_points: &[Complex64],
    beta_prime: f64,
) -> Result<Vec<Vec<Complex64>>, QError> {
    u.coeffs().iter().map(|c| z_points.iter().map(|&z| inverse_fourier_eval(c, z, beta_prime)).collect()).collect()
}

/// Order-by-order mismatch of the t-plane equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainResidual {
    /// `‖residual_p‖_(β,μ)` for `p = 1..=N`.
    pub per_order: Vec<f64>,
    /// Largest `‖·‖_(β,μ)` among the terms entering order `p`.
    pub scale: Vec<f64>,
    /// Orders `≤ N - max ℓ₀` count; the rest sit at the truncation boundary.
    pub checked_orders: usize,
}

impl MainResidual {
    pub fn max_checked(&self) -> f64 {
        self.per_order.iter().take(self.checked_orders).copied().fold(0.0, f64::max)
    }
}

/// `exp_q(α t^d σ^{d/k})` applied to a series: `Σ_n α^n/[n]_q! (t^d σ^{d/k})^{(n)}`.
pub fn apply_exp_operator(
    u: &TruncatedSeries<FourierFn>,
    alpha: f64,
    d: u32,
    params: &QParams,
) -> Result<TruncatedSeries<FourierFn>, QError> {
    let order = u.order();
    let k = params.k() as i64;
    let dd = d as i64;
    let mut out = TruncatedSeries::zeros(u.zero().clone(), order);
    for p in 1..=order {
        let mut n = 0u32;
        while p + (n as usize) * d as usize <= order {
            let ni = n as i64;
            let pi = p as i64;
            // (d/k)(n p + d n(n-1)/2)
            let e = Rational64::new(dd * (2 * ni * pi + dd * ni * (ni - 1)), 2 * k);
            let c = alpha.powi(n as i32) / q_factorial(n, params.q())? * params.qpow(e);
            let to = p + n as usize * d as usize;
            let prev = out.coeff(to).clone();
            out.set_coeff(to, prev.add(&u.coeff(p).scale(c.into())))?;
            n += 1;
        }
    }
    Ok(out)
}

/// Evaluates the t-plane equation on `Û` coefficient by coefficient.
pub fn main_equation_residual(u: &TruncatedSeries<FourierFn>, spec: &ProblemSpec) -> Result<MainResidual, QError> {
    let params = &spec.params;
    let order = u.order();
    let zero = spec.zero_fn();
    let q_sym = spec.symbol_fn(&spec.q_poly);
    let rd_sym = spec.symbol_fn(&spec.r_d);

    let lhs = u.map_indexed(|_, c| c.mul(&q_sym));
    let exp_term = apply_exp_operator(&u.map_indexed(|_, c| c.mul(&rd_sym)), spec.alpha_d, spec.d_d, params)?;
    let mut terms = vec![lhs.clone(), exp_term.clone()];

    for t in &spec.terms {
        let shifted =
            crate::series::apply_t_sigma(u, t.l0 as usize, Rational64::from_integer(t.l1 as i64), order, params);
        let placed = if t.l2 >= 2 { crate::series::mahler(&shifted, t.l2, order)? } else { shifted };
        let r_sym = spec.symbol_fn(&t.r);
        let conv = placed
            .coeffs()
            .iter()
            .map(|c| Ok(convolve(&t.a, &c.mul(&r_sym))?.scale((1.0 / (2.0 * PI).sqrt()).into())))
            .collect::<Result<Vec<_>, QError>>()?;
        terms.push(TruncatedSeries::new(zero.clone(), conv)?);
    }

    let mut forcing = TruncatedSeries::zeros(zero.clone(), order);
    for f in &spec.forcing {
        let j = f.j as usize;
        if j <= order {
            let c = f.f.scale(params.qpow(borel_exponent(j, params.k())).into());
            let prev = forcing.coeff(j).clone();
            forcing.set_coeff(j, prev.add(&c))?;
        }
    }
    terms.push(forcing);

    let mut res = terms[0].clone();
    for t in &terms[1..] {
        res = res.sub(t)?;
    }
    let per_order = res.coeffs().iter().map(enorm).collect();
    let scale = (1..=order).map(|p| terms.iter().map(|t| enorm(t.coeff(p))).fold(0.0, f64::max)).collect();
    Ok(MainResidual { per_order, scale, checked_orders: order.saturating_sub(spec.max_l0() as usize) })
}

/// `P_m(τ) ω(τ,m) - [bracket](τ,m)` coefficient by coefficient.
pub fn borel_plane_residual(
    omega: &TruncatedSeries<FourierFn>,
    op: &H1Operator<'_>,
) -> Result<TruncatedSeries<FourierFn>, QError> {
    let spec = op.spec;
    let order = op.order;
    let (s, _) = op.rhs(omega)?;
    let per_m: Vec<Vec<Complex64>> = spec.grid.points().map(|m| pm_taylor(m, spec, order)).collect::<Result<_, _>>()?;
    let p_fns: Vec<FourierFn> = (0..=order)
        .map(|i| FourierFn::new(spec.grid, spec.beta, spec.mu, per_m.iter().map(|c| c[i]).collect()))
        .collect::<Result<_, _>>()?;
    let pw = times_inverse_symbol(&p_fns, omega);
    pw.sub(&s)
}
