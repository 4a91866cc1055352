//! The `G_q`-sum and the operators built on it.
//!
//! `ω(u,m)` is known as a truncated series near `0`. On the sector it is
//! evaluated by the right-hand side of the continued Borel-plane equation
//!
//! `ω(u,m) = [Σ_j F_j(m) u^j + Σ_ℓ (2π)^{-1/2} A_ℓ ⋆ (R_ℓ(i·) T_ℓω)(u,m)] / P_m(u)`,
//!
//! where `T_ℓω(u) = q^{-ℓ₀(ℓ₀-1)/(2k)} u^{ℓ₀} ω(q^{ℓ₁-ℓ₀/k} u)` for `ℓ₂ = 1`
//! (the dilated point is closer to `0`, so the recursion ends in the disc)
//! and, for `ℓ₂ ≥ 2`, the contour-integral deceleration of the same
//! expression, applied term by term to the disc series and evaluated at `u^{ℓ₂}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{deceleration_orders, q_laplace, Estimate, RayQuadrature, WINDOW_EXPONENT};
use crate::error::QError;
use crate::fourier::{convolve, enorm, inverse_fourier_eval, FourierFn};
use crate::geometry::{MahlerTerm, ProblemSpec, SectorConfig};
use crate::qcore::{exp_q, pi_qk, theta_kernel_log, CoveringPoint, QParams};
use crate::series::{Coeff, TruncatedSeries};

/// Anything that yields `m ↦ ω(u,m)` at a covering point.
pub trait OmegaSource: Sync {
    fn omega(&self, u: CoveringPoint) -> Result<FourierFn, QError>;
}

impl<F> OmegaSource for F
where
    F: Fn(CoveringPoint) -> Result<FourierFn, QError> + Sync,
{
    fn omega(&self, u: CoveringPoint) -> Result<FourierFn, QError> {
        self(u)
    }
}

/// Ray window for an integrand behaving like `u^n`, `n_lo ≤ n ≤ n_hi`.
pub fn ray_window(t: CoveringPoint, theta_d: f64, n_lo: f64, n_hi: f64, params: &QParams) -> RayQuadrature {
    let a = params.gauss_rate();
    let w = (WINDOW_EXPONENT / a).sqrt();
    let lt = t.r().ln();
    let s_min = lt + (n_lo - 0.5) / (2.0 * a) - w;
    let s_max = lt + (n_hi - 0.5) / (2.0 * a) + w;
    let nodes = (((s_max - s_min) / 0.25).ceil() as usize).max(32);
    RayQuadrature { theta_d, s_min, s_max, nodes: nodes + nodes % 2, max_doublings: 8, certified_radius: f64::INFINITY }
}

/// `D̂_p(x ↦ x^j)(h)` by the contour integral on the circle through the
/// saddle point, `r = |h| exp(-(j - 1/2)/(2a'))`, `a' = k'/(2 log q)`.
pub fn decelerated_monomial(
    j: usize,
    p: u32,
    h: CoveringPoint,
    intervals: usize,
    params: &QParams,
) -> Result<Estimate, QError> {
    let (mut e, log_scale) = decelerated_monomial_scaled(j, p, h, intervals, params)?;
    let s = log_scale.exp();
    e.value *= s;
    e.error *= s;
    Ok(e)
}

/// [`decelerated_monomial`] as `(estimate, L)` with the true value `estimate · e^L`.
///
/// `L` is the real part of the exponent at the saddle, so the estimate is of
/// order one; far out on a ray `q^{dec} h^j` leaves the `f64` range while its
/// product with the tiny series coefficient does not.
pub fn decelerated_monomial_scaled(
    j: usize,
    p: u32,
    h: CoveringPoint,
    intervals: usize,
    params: &QParams,
) -> Result<(Estimate, f64), QError> {
    if p < 2 {
        return Err(QError::BadMahlerPower(p));
    }
    let (k1, k2) = deceleration_orders(p, params.k());
    let a = k1 / (2.0 * params.ln_q());
    let jf = j as f64;
    let lr = (0.5 - jf) / (2.0 * a);
    let ln_rc = h.r().ln() + lr;
    let c = super::borel_constant(k1, params).ln();
    let shift = -jf * k2 * params.ln_q();
    let w = (WINDOW_EXPONENT / a).sqrt();
    let log_scale = c + a * lr * lr - 0.5 * lr + jf * ln_rc + shift;
    let f = |dt: f64| {
        let l = Complex64::new(lr, dt);
        let ln_x = Complex64::new(ln_rc, h.theta() + dt);
        Ok((c + a * l * l - 0.5 * l + jf * ln_x + shift - log_scale).exp())
    };
    Ok((super::trapezoid_fixed(f, -w, w, intervals)?, log_scale))
}

/// `Σ_n c_n D̂_p(x^{n+offset})(h)` for coefficients `c_n`, `n = 1..`, with
/// the scale of each product formed in logarithms. Returns value and error.
fn decelerated_sum<C: Coeff>(
    c: &[C],
    offset: usize,
    p: u32,
    h: CoveringPoint,
    table: &DecelerationTable,
    zero: C,
) -> Result<(C, f64), QError> {
    let mut acc = zero;
    let mut err = 0.0;
    for (i, cn) in c.iter().enumerate() {
        let size = cn.size();
        if size == 0.0 {
            continue;
        }
        let (d, log_scale) = table.scaled(i + 1 + offset, p, h)?;
        let f = (log_scale + size.ln()).exp();
        acc = acc.add(&cn.scale(d.value * (f / size)));
        err += d.error * f;
    }
    Ok((acc, err))
}

/// `(j, p, bits of |h|, bits of arg h)`.
type DecelerationKey = (usize, u32, u64, u64);

/// Cache of [`decelerated_monomial`] values keyed on `(j, p, h)`.
pub struct DecelerationTable {
    params: QParams,
    intervals: usize,
    cache: Mutex<HashMap<DecelerationKey, (Estimate, f64)>>,
}

/// Default number of contour intervals.
pub const CONTOUR_INTERVALS: usize = 64;

impl DecelerationTable {
    pub fn new(params: QParams, intervals: usize) -> Self {
        DecelerationTable { params, intervals, cache: Mutex::new(HashMap::new()) }
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn value(&self, j: usize, p: u32, h: CoveringPoint) -> Result<Estimate, QError> {
        let (mut e, log_scale) = self.scaled(j, p, h)?;
        let s = log_scale.exp();
        e.value *= s;
        e.error *= s;
        Ok(e)
    }

    /// The cached `(estimate, L)` pair of [`decelerated_monomial_scaled`].
    pub fn scaled(&self, j: usize, p: u32, h: CoveringPoint) -> Result<(Estimate, f64), QError> {
        let key = (j, p, h.r().to_bits(), h.theta().to_bits());
        if let Some(e) = self.cache.lock().unwrap().get(&key) {
            return Ok(*e);
        }
        let e = decelerated_monomial_scaled(j, p, h, self.intervals, &self.params)?;
        self.cache.lock().unwrap().insert(key, e);
        Ok(e)
    }
}

/// Largest `b = r_max 2^{-i}` at which the last series coefficient is
/// negligible: `‖ω_N‖ b^N ≤ eps · max_n ‖ω_n‖ b^n`.
pub fn default_base_radius(omega: &TruncatedSeries<FourierFn>, r_max: f64, eps: f64) -> f64 {
    let norms: Vec<f64> = omega.coeffs().iter().map(enorm).collect();
    let n = norms.len();
    let mut b = r_max;
    for _ in 0..60 {
        let terms: Vec<f64> = norms.iter().enumerate().map(|(i, c)| c * b.powi(i as i32 + 1)).collect();
        let top = terms.iter().copied().fold(0.0, f64::max);
        if n == 0 || terms[n - 1] <= eps * top {
            return b;
        }
        b /= 2.0;
    }
    b
}

/// `ω` on the disc by its series and on the sector by the continued equation.
pub struct BorelEvaluator<'a> {
    spec: &'a ProblemSpec,
    series: TruncatedSeries<FourierFn>,
    base_radius: f64,
    q_sym: FourierFn,
    rd_sym: FourierFn,
    r_syms: Vec<FourierFn>,
    /// `(2π)^{-1/2} q^{-ℓ₀(ℓ₀-1)/(2k)} q^{(ℓ₁-ℓ₀/k)n} A_ℓ ⋆ (R_ℓ ω_n)`, `n = 1..=N`.
    term_series: Vec<Vec<FourierFn>>,
    decel: DecelerationTable,
    cache: Mutex<HashMap<(u64, u64), FourierFn>>,
}

impl<'a> BorelEvaluator<'a> {
    /// Uses the series for `|u| ≤ base_radius`. Without Mahler terms the
    /// continued equation has no `ω` on its right side and any base radius works.
    pub fn new(spec: &'a ProblemSpec, series: TruncatedSeries<FourierFn>, base_radius: f64) -> Result<Self, QError> {
        let params = &spec.params;
        let norm = 1.0 / (2.0 * PI).sqrt();
        let r_syms: Vec<FourierFn> = spec.terms.iter().map(|t| spec.symbol_fn(&t.r)).collect();
        let mut term_series = Vec::with_capacity(spec.terms.len());
        for (t, r) in spec.terms.iter().zip(&r_syms) {
            let shift = t.borel_shift(params.k());
            let pre = t.borel_prefactor(params);
            let per_n = series
                .coeffs()
                .par_iter()
                .enumerate()
                .map(|(i, w)| {
                    let f = norm * pre * params.qpow(shift * (i as i64 + 1));
                    Ok(convolve(&t.a, &w.mul(r))?.scale(f.into()))
                })
                .collect::<Result<Vec<_>, QError>>()?;
            term_series.push(per_n);
        }
        Ok(BorelEvaluator {
            spec,
            q_sym: spec.symbol_fn(&spec.q_poly),
            rd_sym: spec.symbol_fn(&spec.r_d),
            r_syms,
            term_series,
            decel: DecelerationTable::new(*params, CONTOUR_INTERVALS),
            series,
            base_radius,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// [`BorelEvaluator::new`] with [`default_base_radius`] capped at `config.r`.
    pub fn for_config(
        spec: &'a ProblemSpec,
        series: TruncatedSeries<FourierFn>,
        config: &SectorConfig,
    ) -> Result<Self, QError> {
        let base =
            if spec.terms.is_empty() { 0.0 } else { default_base_radius(&series, config.r, spec.params.eps_rel()) };
        Self::new(spec, series, base)
    }

    pub fn with_contour_intervals(mut self, intervals: usize) -> Self {
        self.decel = DecelerationTable::new(self.spec.params, intervals);
        self
    }

    pub fn spec(&self) -> &ProblemSpec {
        self.spec
    }

    pub fn series(&self) -> &TruncatedSeries<FourierFn> {
        &self.series
    }

    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn deceleration(&self) -> &DecelerationTable {
        &self.decel
    }

    /// `exp_q(α̃_D u^{d_D})`.
    pub fn exp_factor(&self, u: CoveringPoint) -> Result<Complex64, QError> {
        exp_q(self.spec.alpha_tilde() * u.to_complex().powu(self.spec.d_d), &self.spec.params)
    }

    /// `m ↦ P_m(u)`.
    pub fn symbol_at(&self, u: CoveringPoint) -> Result<FourierFn, QError> {
        let e = self.exp_factor(u)?;
        Ok(self.q_sym.sub(&self.rd_sym.scale(e)))
    }

    /// The bracket of the continued equation at `u`.
    pub fn bracket(&self, u: CoveringPoint) -> Result<FourierFn, QError> {
        let spec = self.spec;
        let params = &spec.params;
        let uc = u.to_complex();
        let mut acc = spec.zero_fn();
        for f in &spec.forcing {
            acc = acc.add(&f.f.scale(uc.powu(f.j)));
        }
        for (idx, t) in spec.terms.iter().enumerate() {
            let c = &self.term_series[idx];
            if t.l2 >= 2 {
                let h = u.powi(t.l2 as i32);
                let (v, _) = decelerated_sum(c, t.l0 as usize, t.l2, h, &self.decel, spec.zero_fn())?;
                acc = acc.add(&v);
            } else {
                let v = u.scale(params.qpow(t.borel_shift(params.k())));
                let inner = if v.r() <= self.base_radius {
                    horner(c, uc, &spec.zero_fn())
                } else {
                    let w = self.omega(v)?;
                    let f = t.borel_prefactor(params) / (2.0 * PI).sqrt();
                    convolve(&t.a, &w.mul(&self.r_syms[idx]))?.scale(f.into())
                };
                acc = acc.add(&inner.scale(uc.powu(t.l0)));
            }
        }
        Ok(acc)
    }

    fn continued(&self, u: CoveringPoint) -> Result<FourierFn, QError> {
        let b = self.bracket(u)?;
        let p = self.symbol_at(u)?;
        let eps = self.spec.params.eps_abs();
        let mut vals = Vec::with_capacity(p.values().len());
        for (bv, pv) in b.values().iter().zip(p.values()) {
            if pv.norm() < eps {
                let uc = u.to_complex();
                return Err(QError::ZeroDivision { re: uc.re, im: uc.im });
            }
            vals.push(cdiv(*bv, *pv));
        }
        FourierFn::new(self.spec.grid, self.spec.beta, self.spec.mu, vals)
    }
}

/// `a / b` without forming `a · conj(b)`, which overflows once `|a||b|`
/// passes `f64::MAX` even when the quotient is moderate.
pub fn cdiv(a: Complex64, b: Complex64) -> Complex64 {
    let s = b.re.abs().max(b.im.abs());
    if s == 0.0 || !s.is_finite() {
        return a / b;
    }
    (a / s) / (b / s)
}

/// `Σ_{n≥1} c_n v^n` with `c` indexed from `n = 1`.
fn horner(c: &[FourierFn], v: Complex64, zero: &FourierFn) -> FourierFn {
    let mut acc = zero.clone();
    for cn in c.iter().rev() {
        acc = acc.add(cn).scale(v);
    }
    acc
}

impl OmegaSource for BorelEvaluator<'_> {
    fn omega(&self, u: CoveringPoint) -> Result<FourierFn, QError> {
        if u.r() == 0.0 {
            return Ok(self.spec.zero_fn());
        }
        if u.r() <= self.base_radius {
            return Ok(self.series.eval(u.to_complex()));
        }
        let key = (u.r().to_bits(), u.theta().to_bits());
        if let Some(w) = self.cache.lock().unwrap().get(&key) {
            return Ok(w.clone());
        }
        let w = self.continued(u)?;
        self.cache.lock().unwrap().insert(key, w.clone());
        Ok(w)
    }
}

/// `u^d(t,z) = π_{q,k} (2π)^{-1/2} ∬ Θ_k(t/u) ω(u,m) e^{imz} dm du/u`.
pub fn gq_sum(
    omega: &dyn OmegaSource,
    t: CoveringPoint,
    z: Complex64,
    beta_prime: f64,
    quad: &RayQuadrature,
    params: &QParams,
) -> Result<Estimate, QError> {
    if t.r() == 0.0 {
        return Ok(Estimate::exact(Complex64::new(0.0, 0.0)));
    }
    q_laplace(|u| inverse_fourier_eval(&omega.omega(u)?, z, beta_prime), t, quad, params)
}

/// `exp_q(α̃ u^d)`, failing with `ZeroDivision` within `eps_abs` of a zero.
pub fn exp_divisor(u: CoveringPoint, alpha_tilde: f64, d: u32, params: &QParams) -> Result<Complex64, QError> {
    let uc = u.to_complex();
    let e = exp_q(alpha_tilde * uc.powu(d), params)?;
    if e.norm() < params.eps_abs() {
        return Err(QError::ZeroDivision { re: uc.re, im: uc.im });
    }
    Ok(e)
}

/// The `G_q`-sum with `1/exp_q(α̃_D u^{d_D})` inserted in the integrand.
pub fn expq_inverse_op(
    omega: &dyn OmegaSource,
    t: CoveringPoint,
    z: Complex64,
    beta_prime: f64,
    spec: &ProblemSpec,
    quad: &RayQuadrature,
) -> Result<Estimate, QError> {
    let params = &spec.params;
    if t.r() == 0.0 {
        return Ok(Estimate::exact(Complex64::new(0.0, 0.0)));
    }
    q_laplace(
        |u| {
            let e = exp_divisor(u, spec.alpha_tilde(), spec.d_d, params)?;
            Ok(cdiv(inverse_fourier_eval(&omega.omega(u)?, z, beta_prime)?, e))
        },
        t,
        quad,
        params,
    )
}

/// `h_n(z) = F⁻¹(q^{-ℓ₀(ℓ₀-1)/(2k)} q^{(ℓ₁-ℓ₀/k)n} R_ℓ ω_n)(z)`, `n = 1..=N`.
pub fn g_ellk_coefficients(
    omega: &TruncatedSeries<FourierFn>,
    term: &MahlerTerm,
    z: Complex64,
    beta_prime: f64,
    spec: &ProblemSpec,
) -> Result<Vec<Complex64>, QError> {
    let params = &spec.params;
    let r = spec.symbol_fn(&term.r);
    let shift = term.borel_shift(params.k());
    let pre = term.borel_prefactor(params);
    omega
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let f = pre * params.qpow(shift * (i as i64 + 1));
            Ok(inverse_fourier_eval(&w.mul(&r), z, beta_prime)? * f)
        })
        .collect()
}

/// The deceleration part of the `G_{ℓ,k}` integrand at `u`: `Σ_n h_n(z) D̂_{ℓ₂}(x^{n+ℓ₀})(u^{ℓ₂})`.
pub fn g_ellk_inner(
    h: &[Complex64],
    term: &MahlerTerm,
    u: CoveringPoint,
    table: &DecelerationTable,
) -> Result<(Complex64, f64), QError> {
    if term.l2 < 2 {
        return Err(QError::BadMahlerPower(term.l2));
    }
    decelerated_sum(h, term.l0 as usize, term.l2, u.powi(term.l2 as i32), table, Complex64::new(0.0, 0.0))
}

/// `G_{ℓ,k}` for `ℓ₂ ≥ 2`: ray integral of `Θ_k(t/u) g_ellk_inner(u) / exp_q(α̃_D u^{d_D})`.
#[allow(clippy::too_many_arguments)]
pub fn g_ellk_op(
    omega: &TruncatedSeries<FourierFn>,
    term: &MahlerTerm,
    t: CoveringPoint,
    z: Complex64,
    beta_prime: f64,
    spec: &ProblemSpec,
    quad: &RayQuadrature,
    table: &DecelerationTable,
) -> Result<Estimate, QError> {
    let params = &spec.params;
    if t.r() == 0.0 {
        return Ok(Estimate::exact(Complex64::new(0.0, 0.0)));
    }
    let h = g_ellk_coefficients(omega, term, z, beta_prime, spec)?;
    q_laplace(
        |u| {
            let e = exp_divisor(u, spec.alpha_tilde(), spec.d_d, params)?;
            Ok(cdiv(g_ellk_inner(&h, term, u, table)?.0, e))
        },
        t,
        quad,
        params,
    )
}

/// Fixed-node trapezoid of a vector-valued ray integrand against `π_{q,k} Θ_k(t/u)`;
/// returns values and `|I_n - I_{n/2}|` per component.
fn laplace_vector<F>(
    f: F,
    width: usize,
    t: CoveringPoint,
    quad: &RayQuadrature,
    params: &QParams,
) -> Result<(Vec<Complex64>, Vec<f64>), QError>
where
    F: Fn(CoveringPoint) -> Result<Vec<Complex64>, QError> + Sync,
{
    let n = quad.nodes.max(2) & !1;
    let h = (quad.s_max - quad.s_min) / n as f64;
    let lt = t.ln();
    let pi = pi_qk(params);
    let vals: Vec<Vec<Complex64>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let s = quad.s_min + i as f64 * h;
            let u = quad.point(s);
            let k = theta_kernel_log(lt - Complex64::new(s, quad.theta_d), params) * pi;
            let row: Vec<Complex64> = f(u)?.into_iter().map(|v| v * k).collect();
            if row.iter().any(|v| !v.is_finite()) {
                return Err(QError::NonFinite { s });
            }
            Ok(row)
        })
        .collect::<Result<_, QError>>()?;
    let mut fine = vec![Complex64::new(0.0, 0.0); width];
    let mut coarse = vec![Complex64::new(0.0, 0.0); width];
    for (i, row) in vals.iter().enumerate() {
        let end = i == 0 || i == n;
        let wf = if end { 0.5 * h } else { h };
        for c in 0..width {
            fine[c] += row[c] * wf;
        }
        if i % 2 == 0 {
            let wc = if end { h } else { 2.0 * h };
            for c in 0..width {
                coarse[c] += row[c] * wc;
            }
        }
    }
    let err = fine.iter().zip(&coarse).map(|(a, b)| (a - b).norm()).collect();
    Ok((fine, err))
}

/// Quadrature settings of the residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSettings {
    /// `|Im z|` bound of the strip.
    pub beta_prime: f64,
    /// Multiplies the default ray node count.
    pub node_multiplier: usize,
}

impl ResidualSettings {
    pub fn new(beta_prime: f64) -> Self {
        ResidualSettings { beta_prime, node_multiplier: 1 }
    }

    pub fn doubled(&self) -> Self {
        ResidualSettings { node_multiplier: 2 * self.node_multiplier, ..*self }
    }
}

/// One sample point of the transformed-equation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Row {
    pub t: CoveringPoint,
    pub z: Complex64,
    /// `Exp_q⁻¹ Q(∂_z) u^d`.
    pub lhs: Complex64,
    /// `R_D(∂_z) u^d`.
    pub rd_term: Complex64,
    /// `Exp_q⁻¹ f`.
    pub forcing_term: Complex64,
    /// One value per Mahler term, in problem order.
    pub terms: Vec<Complex64>,
    pub residual: f64,
    /// `Σ |I_n - I_{n/2}| + eps_rel Σ |term|`.
    pub budget: f64,
}

impl Theorem2Row {
    pub fn csv_header(n_terms: usize) -> String {
        let mut cols = vec!["t_r", "t_theta", "z_re", "z_im", "lhs_re", "lhs_im", "rd_re", "rd_im", "f_re", "f_im"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        for i in 0..n_terms {
            cols.push(format!("term{i}_re"));
            cols.push(format!("term{i}_im"));
        }
        cols.push("residual".into());
        cols.push("tolerance_budget".into());
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut v = vec![self.t.r(), self.t.theta(), self.z.re, self.z.im];
        for c in [self.lhs, self.rd_term, self.forcing_term].iter().chain(&self.terms) {
            v.push(c.re);
            v.push(c.im);
        }
        v.push(self.residual);
        v.push(self.budget);
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    }
}

/// Evaluates every term of the transformed equation by quadrature at each `(t, z)`.
pub fn theorem2_residual(
    ev: &BorelEvaluator<'_>,
    config: &SectorConfig,
    points: &[(CoveringPoint, Complex64)],
    settings: &ResidualSettings,
) -> Result<Vec<Theorem2Row>, QError> {
    let spec = ev.spec;
    let params = &spec.params;
    let bp = settings.beta_prime;
    let n_terms = spec.terms.len();
    let width = 3 + n_terms;
    let order = ev.series.order() as f64;
    points
        .iter()
        .map(|&(t, z)| {
            let mut quad = ray_window(t, config.d, 1.0, order.max(1.0), params);
            quad.certified_radius = config.r;
            if t.r() > quad.certified_radius {
                return Err(QError::DomainTooLarge { r: t.r(), radius: quad.certified_radius });
            }
            quad.nodes *= settings.node_multiplier;
            let a_z: Vec<Complex64> =
                spec.terms.iter().map(|tm| inverse_fourier_eval(&tm.a, z, bp)).collect::<Result<_, _>>()?;
            let h_n: Vec<Vec<Complex64>> = spec
                .terms
                .iter()
                .map(|tm| if tm.l2 >= 2 { g_ellk_coefficients(&ev.series, tm, z, bp, spec) } else { Ok(Vec::new()) })
                .collect::<Result<_, _>>()?;
            let integrand = |u: CoveringPoint| -> Result<Vec<Complex64>, QError> {
                let e = exp_divisor(u, spec.alpha_tilde(), spec.d_d, params)?;
                let w = ev.omega(u)?;
                let uc = u.to_complex();
                let mut row = Vec::with_capacity(width);
                row.push(cdiv(inverse_fourier_eval(&w.mul(&ev.q_sym), z, bp)?, e));
                row.push(inverse_fourier_eval(&w.mul(&ev.rd_sym), z, bp)?);
                let mut forcing = Complex64::new(0.0, 0.0);
                for f in &spec.forcing {
                    forcing += inverse_fourier_eval(&f.f, z, bp)? * uc.powu(f.j);
                }
                row.push(cdiv(forcing, e));
                for (idx, tm) in spec.terms.iter().enumerate() {
                    let v = if tm.l2 >= 2 {
                        g_ellk_inner(&h_n[idx], tm, u, &ev.decel)?.0
                    } else {
                        let shifted = u.scale(params.qpow(tm.borel_shift(params.k())));
                        let ws = ev.omega(shifted)?;
                        inverse_fourier_eval(&ws.mul(&ev.r_syms[idx]), z, bp)?
                            * tm.borel_prefactor(params)
                            * uc.powu(tm.l0)
                    };
                    row.push(cdiv(v, e));
                }
                Ok(row)
            };
            let (vals, errs) = laplace_vector(integrand, width, t, &quad, params)?;
            let terms: Vec<Complex64> = (0..n_terms).map(|i| vals[3 + i] * a_z[i]).collect();
            let rhs = vals[1] + vals[2] + terms.iter().sum::<Complex64>();
            let mut budget = errs[0] + errs[1] + errs[2];
            for i in 0..n_terms {
                budget += errs[3 + i] * a_z[i].norm();
            }
            let mag = vals[0].norm() + vals[1].norm() + vals[2].norm() + terms.iter().map(|c| c.norm()).sum::<f64>();
            budget += params.eps_rel() * mag;
            Ok(Theorem2Row {
                t,
                z,
                lhs: vals[0],
                rd_term: vals[1],
                forcing_term: vals[2],
                terms,
                residual: (vals[0] - rhs).norm(),
                budget,
            })
        })
        .collect()
}

/// One sector sample of the continued-equation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorResidualRow {
    pub tau: CoveringPoint,
    /// `‖P_m(τ) ω_A(τ,·) - bracket_B(τ,·)‖_(β,μ)`.
    pub residual: f64,
    /// `‖bracket_B(τ,·)‖_(β,μ)`.
    pub scale: f64,
    /// `‖ω_A(τ,·)‖_(β,μ) / (|τ| exp(k log²|τ|/(2 log q) + α log|τ|))`.
    pub growth_ratio: f64,
}

/// Compares `ω` continued by `a` against the bracket evaluated with `b`
/// (typically the same series with a different base radius).
pub fn eaux2_sector_residual(
    a: &BorelEvaluator<'_>,
    b: &BorelEvaluator<'_>,
    taus: &[CoveringPoint],
    alpha: f64,
) -> Result<Vec<SectorResidualRow>, QError> {
    let params = &a.spec.params;
    let rate = params.gauss_rate();
    taus.par_iter()
        .map(|&tau| {
            let w = a.omega(tau)?;
            let p = a.symbol_at(tau)?;
            let br = b.bracket(tau)?;
            let l = tau.r().ln();
            Ok(SectorResidualRow {
                tau,
                residual: enorm(&w.mul(&p).sub(&br)),
                scale: enorm(&br),
                growth_ratio: enorm(&w) / (tau.r() * (rate * l * l + alpha * l).exp()),
            })
        })
        .collect()
}

/// `(N, |u^d(t,z) - Σ_{n<N} u_n(z) t^n|)` for each requested `N`.
#[allow(clippy::too_many_arguments)]
pub fn gevrey_errors(
    omega: &dyn OmegaSource,
    u_hat: &TruncatedSeries<FourierFn>,
    t: CoveringPoint,
    z: Complex64,
    beta_prime: f64,
    quad: &RayQuadrature,
    ns: &[usize],
    params: &QParams,
) -> Result<Vec<(usize, f64)>, QError> {
    let value = gq_sum(omega, t, z, beta_prime, quad, params)?.value;
    let un: Vec<Complex64> =
        u_hat.coeffs().iter().map(|c| inverse_fourier_eval(c, z, beta_prime)).collect::<Result<_, _>>()?;
    let tc = t.to_complex();
    Ok(ns
        .iter()
        .map(|&n| {
            let partial: Complex64 = (1..n.min(un.len() + 1)).map(|p| un[p - 1] * tc.powu(p as u32)).sum();
            (n, (value - partial).norm())
        })
        .collect())
}

/// Largest `|t|` at which the terms `‖U_n‖ |t|^n` still decrease for `n < n_max`:
/// `min_n ‖U_n‖ / ‖U_{n+1}‖`.
pub fn gevrey_radius(u_hat: &TruncatedSeries<FourierFn>, n_max: usize) -> f64 {
    let norms: Vec<f64> = u_hat.coeffs().iter().map(enorm).collect();
    (1..n_max.min(norms.len()))
        .filter(|&n| norms[n] > 0.0)
        .map(|n| norms[n - 1] / norms[n])
        .fold(f64::INFINITY, f64::min)
}
