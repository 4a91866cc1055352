//! Problem data of the main equation, the Borel-plane symbol
//! `P_m(τ) = Q(im) - exp_q(α̃_D τ^{d_D}) R_D(im)`, the choice of sector and
//! radius, measured lower bounds for `|P_m|`, and the Taylor coefficients of
//! `1/P_m`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::QError;
use crate::fourier::{FourierFn, Grid};
use crate::poly::Poly;
use crate::qcore::{envelope_check, envelope_radius, exp_q, mu_growth, q_factorial, GrowthEnvelope, QParams, Sector};
use crate::series::borel_exponent;

/// One term `A_ℓ(m) ⋆ (t^{ℓ₀} σ^{ℓ₁} U)(t^{ℓ₂}) R_ℓ(im)` of the main equation.
#[derive(Debug, Clone, PartialEq)]
pub struct MahlerTerm {
    pub l0: u32,
    pub l1: i32,
    pub l2: u32,
    pub r: Poly,
    pub a: FourierFn,
}

impl MahlerTerm {
    /// `ℓ₁ - ℓ₀/k`, the dilation exponent seen in the Borel plane.
    pub fn borel_shift(&self, k: u32) -> Rational64 {
        Rational64::from_integer(self.l1 as i64) - Rational64::new(self.l0 as i64, k as i64)
    }

    /// `1 / q^{ℓ₀(ℓ₀-1)/(2k)}`.
    pub fn borel_prefactor(&self, params: &QParams) -> f64 {
        1.0 / params.qpow(borel_exponent(self.l0 as usize, params.k()))
    }
}

/// A forcing term `F_j(m)` attached to `t^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub j: u32,
    pub f: FourierFn,
}

/// All data of the main equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub params: QParams,
    pub q_poly: Poly,
    pub r_d: Poly,
    pub terms: Vec<MahlerTerm>,
    pub alpha_d: f64,
    pub d_d: u32,
    pub forcing: Vec<Forcing>,
    pub beta: f64,
    pub mu: f64,
    pub grid: Grid,
}

/// Pass/fail of one structural condition, with a witness on failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub condition: String,
    pub passed: bool,
    pub witness: Option<String>,
}

/// The structural conditions a problem has to meet, in a fixed order.
pub const CONDITIONS: [&str; 6] =
    ["shift_order", "mahler_degree", "symbol_degrees", "nonvanishing_symbols", "grid_consistency", "ratio_gap"];

impl ProblemSpec {
    /// `α̃_D = α_D / q^{d_D(d_D-1)/(2k)}`.
    pub fn alpha_tilde(&self) -> f64 {
        self.alpha_d / self.params.qpow(borel_exponent(self.d_d as usize, self.params.k()))
    }

    /// Largest admissible disc radius `(q^{1/2}/(q-1) / α̃_D)^{1/d_D}`.
    pub fn rho_max(&self) -> f64 {
        (envelope_radius(&self.params) / self.alpha_tilde()).powf(1.0 / self.d_d as f64)
    }

    pub fn max_l0(&self) -> u32 {
        self.terms.iter().map(|t| t.l0).max().unwrap_or(0)
    }

    /// `Q(im) / R_D(im)` over the grid.
    pub fn ratios(&self) -> Vec<Complex64> {
        self.grid.points().map(|m| self.q_poly.symbol(m) / self.r_d.symbol(m)).collect()
    }

    /// `(r₁, r₂)`: the extreme moduli of `Q(im)/R_D(im)` on the grid.
    pub fn ratio_range(&self) -> (f64, f64) {
        self.ratios().iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), c| (lo.min(c.norm()), hi.max(c.norm())))
    }

    /// Checks every structural condition except the ratio gap, which needs a sector.
    pub fn structural_checks(&self) -> Vec<ConditionCheck> {
        let k = self.params.k() as i64;
        let mut out = Vec::new();

        let bad = self.terms.iter().find(|t| t.l0 == 0 || k * t.l1 as i64 > t.l0 as i64 - k);
        out.push(check(
            CONDITIONS[0],
            bad.map(|t| format!("(l0, l1, l2) = ({}, {}, {}): needs l0 >= 1 and l1 <= l0/k - 1", t.l0, t.l1, t.l2)),
        ));

        let d2 = (self.d_d as i64).pow(2);
        let bad = self.terms.iter().find(|t| t.l2 >= 2 && d2 * ((t.l2 as i64).pow(2) - 1) <= k);
        let bad = bad.or_else(|| self.terms.iter().find(|t| t.l2 == 0));
        out.push(check(
            CONDITIONS[1],
            bad.map(|t| format!("d_D = {} is not above (k/(l2^2-1))^(1/2) for l2 = {}", self.d_d, t.l2)),
        ));

        let dq = self.q_poly.degree();
        let dr = self.r_d.degree();
        let witness = if dq != dr {
            Some(format!("deg Q = {dq} differs from deg R_D = {dr}"))
        } else {
            self.terms
                .iter()
                .find(|t| t.r.degree() > dr)
                .map(|t| format!("deg R_l = {} exceeds deg R_D = {dr} for l0 = {}", t.r.degree(), t.l0))
        };
        out.push(check(CONDITIONS[2], witness));

        let witness = self.grid.points().find_map(|m| {
            if self.q_poly.symbol(m).norm() == 0.0 {
                Some(format!("Q(im) = 0 at m = {m}"))
            } else if self.r_d.symbol(m).norm() == 0.0 {
                Some(format!("R_D(im) = 0 at m = {m}"))
            } else {
                None
            }
        });
        out.push(check(CONDITIONS[3], witness));

        let same = |f: &FourierFn| f.grid() == &self.grid && f.beta() == self.beta && f.mu() == self.mu;
        let witness = if !(self.alpha_d > 0.0 && self.d_d >= 1) {
            Some("alpha_D must be > 0 and d_D >= 1".to_string())
        } else if let Some(t) = self.terms.iter().find(|t| !same(&t.a)) {
            Some(format!("A_l for l0 = {} is not sampled on the problem grid", t.l0))
        } else if let Some(f) = self.forcing.iter().find(|f| !same(&f.f) || f.j == 0) {
            Some(format!("forcing j = {} is malformed or off-grid", f.j))
        } else {
            None
        };
        out.push(check(CONDITIONS[4], witness));
        out
    }

    /// Fails with the first violated structural condition.
    pub fn validate(&self) -> Result<(), QError> {
        match self.structural_checks().into_iter().find(|c| !c.passed) {
            Some(c) => Err(QError::InvalidSpec { condition: c.condition, detail: c.witness.unwrap_or_default() }),
            None => Ok(()),
        }
    }

    /// `m ↦ P(im)` sampled on the problem grid.
    pub fn symbol_fn(&self, p: &Poly) -> FourierFn {
        FourierFn::from_fn(self.grid, self.beta, self.mu, |m| p.symbol(m)).expect("problem grid was validated")
    }

    /// A zero function on the problem grid.
    pub fn zero_fn(&self) -> FourierFn {
        FourierFn::zeros(self.grid, self.beta, self.mu).expect("problem grid was validated")
    }
}

fn check(condition: &str, witness: Option<String>) -> ConditionCheck {
    ConditionCheck { condition: condition.to_string(), passed: witness.is_none(), witness }
}

/// `P_m(τ) = Q(im) - exp_q(α̃_D τ^{d_D}) R_D(im)`.
pub fn eval_pm(tau: Complex64, m: f64, spec: &ProblemSpec) -> Result<Complex64, QError> {
    let e = exp_q(spec.alpha_tilde() * tau.powu(spec.d_d), &spec.params)?;
    Ok(spec.q_poly.symbol(m) - e * spec.r_d.symbol(m))
}

/// Sampling density of sector measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleDensity {
    pub rays: usize,
    pub radii: usize,
}

impl Default for SampleDensity {
    fn default() -> Self {
        SampleDensity { rays: 64, radii: 64 }
    }
}

impl SampleDensity {
    pub fn doubled(&self) -> Self {
        SampleDensity { rays: 2 * self.rays, radii: 2 * self.radii }
    }
}

/// Sector in the τ-plane with its disc radius and measured gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorConfig {
    pub d: f64,
    pub half_opening: f64,
    pub rho: f64,
    /// Working radius of the `(1,R)` norm, inside `(0, rho)`.
    pub r: f64,
    pub alpha_tilde_d: f64,
    pub delta1: f64,
    pub theta_excl: f64,
    pub envelope: GrowthEnvelope,
}

/// Default half-angle of the excluded neighbourhood of the negative axis.
pub const DEFAULT_THETA_EXCL: f64 = PI / 8.0;

/// Samples of `τ`: the sector rays over log-spaced radii, and the disc `D(0, ρ)`.
pub fn sector_samples(d: f64, half_opening: f64, rho: f64, density: SampleDensity) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(2 * density.rays * density.radii);
    let (l0, l1) = ((rho * 1e-3).ln(), (rho * 1e2).ln());
    for i in 0..density.rays {
        let phi = d - half_opening + 2.0 * half_opening * i as f64 / (density.rays - 1).max(1) as f64;
        for j in 0..density.radii {
            let r = (l0 + (l1 - l0) * j as f64 / (density.radii - 1).max(1) as f64).exp();
            out.push(Complex64::from_polar(r, phi));
        }
    }
    for i in 0..density.rays {
        let phi = 2.0 * PI * i as f64 / density.rays as f64;
        for j in 1..=density.radii {
            out.push(Complex64::from_polar(rho * j as f64 / density.radii as f64, phi));
        }
    }
    out.push(Complex64::new(0.0, 0.0));
    out
}

/// `min |Q(im)/R_D(im) - exp_q(α̃_D τ^{d_D})|` over τ samples and the grid,
/// with the minimising `(τ, m)`.
pub fn measure_delta1(
    spec: &ProblemSpec,
    d: f64,
    half_opening: f64,
    rho: f64,
    density: SampleDensity,
) -> Result<(f64, Complex64, f64), QError> {
    use rayon::prelude::*;
    let ratios = spec.ratios();
    let taus = sector_samples(d, half_opening, rho, density);
    let at = spec.alpha_tilde();
    let per_tau: Vec<(f64, Complex64, f64)> = taus
        .par_iter()
        .map(|&tau| {
            let e = exp_q(at * tau.powu(spec.d_d), &spec.params)?;
            let (mut best, mut arg) = (f64::INFINITY, 0);
            for (i, c) in ratios.iter().enumerate() {
                let v = (c - e).norm();
                if v < best {
                    best = v;
                    arg = i;
                }
            }
            Ok((best, tau, spec.grid.point(arg)))
        })
        .collect::<Result<_, QError>>()?;
    Ok(per_tau.into_iter().fold((f64::INFINITY, Complex64::new(0.0, 0.0), 0.0), |a, b| if b.0 < a.0 { b } else { a }))
}

/// Samples used to fit envelope constants during sector selection.
pub const SELECT_ENVELOPE_SAMPLES: usize = 1024;

/// Picks the largest disc radius and shrinks the half-opening until the
/// image sector of direction `d_D · d` passes the envelope check.
pub fn select_sector(spec: &ProblemSpec, requested_d: f64) -> Result<SectorConfig, QError> {
    select_sector_with(spec, requested_d, DEFAULT_THETA_EXCL, SampleDensity::default())
}

pub fn select_sector_with(
    spec: &ProblemSpec,
    requested_d: f64,
    theta_excl: f64,
    density: SampleDensity,
) -> Result<SectorConfig, QError> {
    let dd = spec.d_d as f64;
    let mut half = PI / (4.0 * dd);
    let mut found = None;
    for _ in 0..24 {
        let image = Sector { bisector: dd * requested_d, half_opening: dd * half };
        match envelope_check(&image, theta_excl, SELECT_ENVELOPE_SAMPLES, &spec.params) {
            Ok(env) => {
                found = Some(env);
                break;
            }
            Err(QError::EnvelopeViolation { .. }) => half /= 2.0,
            Err(e) => return Err(e),
        }
    }
    let envelope = found.ok_or(QError::BadDirection { d: requested_d })?;
    let rho = spec.rho_max();
    let (delta1, _, _) = measure_delta1(spec, requested_d, half, rho, density)?;
    if !(delta1 >= spec.params.eps_abs()) {
        return Err(QError::SmallDelta { delta1 });
    }
    Ok(SectorConfig {
        d: requested_d,
        half_opening: half,
        rho,
        r: rho / 2.0,
        alpha_tilde_d: spec.alpha_tilde(),
        delta1,
        theta_excl,
        envelope,
    })
}

/// Measured lower bounds of `|P_m(τ)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub delta1: f64,
    /// `min |P_m(τ)| / |R_D(im)|` over the report's own samples.
    pub min_ratio: f64,
    pub r1: f64,
    pub r2: f64,
    pub ratio_ceiling: f64,
    pub binding: crate::qcore::BindingConstant,
    /// `(|τ|, min over rays and m of |P_m(τ)| / (e^{μ(α̃|τ|^{d_D})} |R_D(im)|))`.
    pub far_field: Vec<(f64, f64)>,
    /// Smallest far-field ratio; the fitted constant of the far-field bound.
    pub far_constant: f64,
}

/// Relative slack allowed between `δ₁` from [`select_sector`] and a refined sampling.
pub const DELTA1_SLACK: f64 = 0.01;

/// Verifies the uniform and far-field lower bounds on fresh samples.
pub fn pm_lower_bound_report(
    spec: &ProblemSpec,
    config: &SectorConfig,
    density: SampleDensity,
) -> Result<LowerBoundReport, QError> {
    let (r1, r2) = spec.ratio_range();
    let (ceiling, binding) = config.envelope.ratio_ceiling();
    let (min_ratio, tau, m) = measure_delta1(spec, config.d, config.half_opening, config.rho, density)?;
    if r2 >= ceiling || min_ratio < config.delta1 * (1.0 - DELTA1_SLACK) {
        let bound = if r2 >= ceiling { ceiling } else { config.delta1 };
        let ratio = if r2 >= ceiling { r2 } else { min_ratio };
        return Err(QError::BoundViolation { tau_re: tau.re, tau_im: tau.im, m, ratio, bound });
    }

    let at = spec.alpha_tilde();
    let r_start = config.rho;
    let n_rad = density.radii.max(2);
    let n_rays = density.rays.clamp(2, 16);
    let m_pts: Vec<f64> = spec.grid.points().step_by((spec.grid.len() / 64).max(1)).collect();
    let mut far_field = Vec::with_capacity(n_rad);
    for j in 0..n_rad {
        let r = r_start * (100.0_f64).powf(j as f64 / (n_rad - 1) as f64);
        let w = mu_growth(at * r.powi(spec.d_d as i32), &spec.params).exp();
        let mut min = f64::INFINITY;
        for i in 0..n_rays {
            let phi = config.d - config.half_opening + 2.0 * config.half_opening * i as f64 / (n_rays - 1) as f64;
            let tau = Complex64::from_polar(r, phi);
            for &m in &m_pts {
                let v = eval_pm(tau, m, spec)?.norm() / (w * spec.r_d.symbol(m).norm());
                min = min.min(v);
            }
        }
        far_field.push((r, min));
    }
    let far_constant = far_field.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    Ok(LowerBoundReport {
        delta1: config.delta1,
        min_ratio,
        r1,
        r2,
        ratio_ceiling: ceiling,
        binding,
        far_field,
        far_constant,
    })
}

/// Power-series coefficients of `P_m(τ)` at `0` up to order `n`.
pub fn pm_taylor(m: f64, spec: &ProblemSpec, n: usize) -> Result<Vec<Complex64>, QError> {
    let qm = spec.q_poly.symbol(m);
    let rm = spec.r_d.symbol(m);
    let at = spec.alpha_tilde();
    let dd = spec.d_d as usize;
    let mut p = vec![Complex64::new(0.0, 0.0); n + 1];
    p[0] = qm - rm;
    let mut j = 1;
    while j * dd <= n {
        p[j * dd] = -rm * at.powi(j as i32) / q_factorial(j as u32, spec.params.q())?;
        j += 1;
    }
    Ok(p)
}

/// Inverts a power series with nonzero constant term up to order `n`.
pub fn invert_series(p: &[Complex64], n: usize, eps: f64) -> Result<Vec<Complex64>, QError> {
    let p0 = p[0];
    if p0.norm() < eps {
        return Err(QError::DivergentInversion(p0.norm()));
    }
    let mut b = vec![Complex64::new(0.0, 0.0); n + 1];
    b[0] = 1.0 / p0;
    for i in 1..=n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=i.min(p.len() - 1) {
            acc += p[j] * b[i - j];
        }
        b[i] = -acc / p0;
    }
    Ok(b)
}

/// Taylor coefficients `f_0(m)..f_N(m)` of `1/P_m(τ)` by series inversion.
pub fn inv_pm_taylor(m: f64, spec: &ProblemSpec, n: usize) -> Result<Vec<Complex64>, QError> {
    invert_series(&pm_taylor(m, spec, n)?, n, spec.params.eps_abs())
}

/// [`inv_pm_taylor`] on the whole grid: `f_p` as functions of `m`, `p = 0..=N`.
pub fn inv_pm_taylor_grid(spec: &ProblemSpec, n: usize) -> Result<Vec<FourierFn>, QError> {
    let per_m: Vec<Vec<Complex64>> = spec.grid.points().map(|m| inv_pm_taylor(m, spec, n)).collect::<Result<_, _>>()?;
    (0..=n).map(|p| FourierFn::new(spec.grid, spec.beta, spec.mu, per_m.iter().map(|c| c[p]).collect())).collect()
}

/// Fitted `C_P` with `|f_p(m)| ≤ C_P R₁^{-p} (1+|m|)^{-deg R_D}` for `p ≤ N`.
pub fn inv_pm_bound(spec: &ProblemSpec, n: usize, r1: f64) -> Result<f64, QError> {
    let deg = spec.r_d.degree() as i32;
    let mut c: f64 = 0.0;
    for m in spec.grid.points() {
        let f = inv_pm_taylor(m, spec, n)?;
        for (p, v) in f.iter().enumerate() {
            c = c.max(v.norm() * r1.powi(p as i32) * (1.0 + m.abs()).powi(deg));
        }
    }
    Ok(c)
}
