//! q-special functions: q-numbers, the q-exponential, the Laplace kernel
//! `Θ_k` and the growth geometry of `exp_q`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::QError;

/// Hard cap on the number of series terms summed by [`exp_q`].
pub const EXP_Q_MAX_TERMS: usize = 500;

/// Global parameters: the base `q > 1`, the order `k ≥ 1` and tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct QParams {
    q: f64,
    k: u32,
    eps_abs: f64,
    eps_rel: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    q: f64,
    k: u32,
    #[serde(default = "default_eps_abs")]
    eps_abs: f64,
    #[serde(default = "default_eps_rel")]
    eps_rel: f64,
}

fn default_eps_abs() -> f64 {
    1e-12
}

fn default_eps_rel() -> f64 {
    1e-10
}

impl TryFrom<RawParams> for QParams {
    type Error = QError;

    fn try_from(raw: RawParams) -> Result<Self, QError> {
        QParams::new(raw.q, raw.k)?.with_tolerances(raw.eps_abs, raw.eps_rel)
    }
}

impl From<QParams> for RawParams {
    fn from(p: QParams) -> Self {
        RawParams { q: p.q, k: p.k, eps_abs: p.eps_abs, eps_rel: p.eps_rel }
    }
}

impl QParams {
    /// Builds parameters with the default tolerances `1e-12` / `1e-10`.
    pub fn new(q: f64, k: u32) -> Result<Self, QError> {
        if !(q.is_finite() && q > 1.0) {
            return Err(QError::InvalidQ(q));
        }
        if k == 0 {
            return Err(QError::InvalidOrder);
        }
        Ok(QParams { q, k, eps_abs: default_eps_abs(), eps_rel: default_eps_rel() })
    }

    pub fn with_tolerances(mut self, eps_abs: f64, eps_rel: f64) -> Result<Self, QError> {
        if !(eps_abs > 0.0 && eps_rel > 0.0 && eps_abs.is_finite() && eps_rel.is_finite()) {
            return Err(QError::InvalidTolerance);
        }
        self.eps_abs = eps_abs;
        self.eps_rel = eps_rel;
        Ok(self)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn eps_abs(&self) -> f64 {
        self.eps_abs
    }

    pub fn eps_rel(&self) -> f64 {
        self.eps_rel
    }

    pub fn ln_q(&self) -> f64 {
        self.q.ln()
    }

    /// `q^e` for an exact rational exponent.
    pub fn qpow(&self, e: Rational64) -> f64 {
        qpow(self.q, e)
    }

    /// The Gaussian rate `k / (2 log q)` shared by `Θ_k` and its inverse.
    pub fn gauss_rate(&self) -> f64 {
        self.k as f64 / (2.0 * self.ln_q())
    }
}

/// `q^e` with `e` held exactly until this point.
pub fn qpow(q: f64, e: Rational64) -> f64 {
    let (n, d) = (*e.numer(), *e.denom());
    if d == 1 {
        return q.powi(n as i32);
    }
    (q.ln() * n as f64 / d as f64).exp()
}

/// A point of the universal covering of `C \ {0}`: modulus and unbounded argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringPoint {
    r: f64,
    theta: f64,
}

impl CoveringPoint {
    pub fn new(r: f64, theta: f64) -> Result<Self, QError> {
        if !(r > 0.0 && r.is_finite() && theta.is_finite()) {
            return Err(QError::InvalidPoint { r, theta });
        }
        Ok(CoveringPoint { r, theta })
    }

    /// Lifts a plane point using the branch whose argument is closest to `near`.
    pub fn lift(z: Complex64, near: f64) -> Result<Self, QError> {
        let base = z.arg();
        let turns = ((near - base) / (2.0 * PI)).round();
        CoveringPoint::new(z.norm(), base + turns * 2.0 * PI)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Projection to the plane; forgets the sheet.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }

    /// `log z = log r + iθ` on this sheet.
    pub fn ln(&self) -> Complex64 {
        Complex64::new(self.r.ln(), self.theta)
    }

    pub fn mul(&self, other: &CoveringPoint) -> CoveringPoint {
        CoveringPoint { r: self.r * other.r, theta: self.theta + other.theta }
    }

    pub fn div(&self, other: &CoveringPoint) -> CoveringPoint {
        CoveringPoint { r: self.r / other.r, theta: self.theta - other.theta }
    }

    pub fn powi(&self, n: i32) -> CoveringPoint {
        CoveringPoint { r: self.r.powi(n), theta: self.theta * n as f64 }
    }

    /// Multiplies the modulus by a positive factor, e.g. a power of `q`.
    pub fn scale(&self, factor: f64) -> CoveringPoint {
        debug_assert!(factor > 0.0);
        CoveringPoint { r: self.r * factor, theta: self.theta }
    }

    pub fn rotate(&self, dtheta: f64) -> CoveringPoint {
        CoveringPoint { r: self.r, theta: self.theta + dtheta }
    }
}

/// `[n]_q = 1 + q + ... + q^{n-1}`, zero for `n = 0`.
pub fn q_number(n: u32, q: f64) -> f64 {
    (0..n).map(|i| q.powi(i as i32)).sum()
}

/// `[n]_q! = [1]_q [2]_q ... [n]_q`.
pub fn q_factorial(n: u32, q: f64) -> Result<f64, QError> {
    let mut acc = 1.0;
    for i in 1..=n {
        acc *= q_number(i, q);
        if !acc.is_finite() {
            return Err(QError::Overflow { n });
        }
    }
    Ok(acc)
}

/// Sums `Σ z^n / [n]_q!` with the next-term stopping rule.
pub fn exp_q(z: Complex64, params: &QParams) -> Result<Complex64, QError> {
    exp_q_with_terms(z, params).map(|(v, _)| v)
}

/// [`exp_q`] together with the number of terms used.
pub fn exp_q_with_terms(z: Complex64, params: &QParams) -> Result<(Complex64, usize), QError> {
    let q = params.q();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut qn = 0.0; // [n]_q via [n]_q = q [n-1]_q + 1
    for n in 1..EXP_Q_MAX_TERMS {
        qn = qn * q + 1.0;
        let next = term * z / qn;
        if next.norm() < params.eps_abs() * (1.0 + sum.norm()) && z.norm() < qn {
            return Ok((sum, n));
        }
        term = next;
        sum += term;
        if !(sum.re.is_finite() && sum.im.is_finite()) {
            return Err(QError::NonConvergence { terms: n + 1 });
        }
    }
    Err(QError::NonConvergence { terms: EXP_Q_MAX_TERMS })
}

/// Derivative `Σ n z^{n-1} / [n]_q!`, same stopping rule as [`exp_q`].
pub fn exp_q_derivative(z: Complex64, params: &QParams) -> Result<Complex64, QError> {
    let q = params.q();
    // term = z^{n-1} / [n]_q!
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut qn = 1.0;
    for n in 2..EXP_Q_MAX_TERMS {
        qn = qn * q + 1.0;
        let next = term * z / qn;
        let add = next * n as f64;
        if add.norm() < params.eps_abs() * (1.0 + sum.norm()) && z.norm() < qn {
            return Ok(sum);
        }
        term = next;
        sum += add;
    }
    Err(QError::NonConvergence { terms: EXP_Q_MAX_TERMS })
}

/// Zeros of `exp_q` in closed form: `-q^{m+1}/(q-1)`.
pub fn exp_q_zero(m: u32, params: &QParams) -> f64 {
    let q = params.q();
    -q.powi(m as i32 + 1) / (q - 1.0)
}

/// Newton refinement of a zero of `exp_q` starting at `guess`.
pub fn locate_zero(guess: Complex64, params: &QParams) -> Result<Complex64, QError> {
    let mut z = guess;
    let mut prev = f64::INFINITY;
    for _ in 0..100 {
        let f = exp_q(z, params)?;
        let df = exp_q_derivative(z, params)?;
        if df.norm() == 0.0 {
            break;
        }
        let step = (f / df).norm();
        z -= f / df;
        let scale = 1.0 + z.norm();
        // rounding in the series sets a floor; stop once the steps stop shrinking there
        if step <= 1e-15 * scale || (step <= 1e-11 * scale && step >= 0.5 * prev) {
            return Ok(z);
        }
        prev = step;
    }
    Err(QError::NonConvergence { terms: 100 })
}

/// `μ(x) = log²x / (2 log q) + (-1/2 + log(q-1)/log q) log x`.
pub fn mu_growth(x: f64, params: &QParams) -> f64 {
    let lq = params.ln_q();
    let lx = x.ln();
    lx * lx / (2.0 * lq) + (-0.5 + (params.q() - 1.0).ln() / lq) * lx
}

/// `Θ_k(z) = exp(-k log²z / (2 log q) + log z / 2)` on the sheet of `z`.
pub fn theta_kernel(z: CoveringPoint, params: &QParams) -> Complex64 {
    theta_kernel_log(z.ln(), params)
}

/// [`theta_kernel`] from a precomputed covering logarithm.
pub fn theta_kernel_log(log_z: Complex64, params: &QParams) -> Complex64 {
    (-params.gauss_rate() * log_z * log_z + 0.5 * log_z).exp()
}

/// `π_{q,k} = q^{-1/(8k)} √k / √(2π log q)`.
pub fn pi_qk(params: &QParams) -> f64 {
    let k = params.k() as f64;
    params.q().powf(-1.0 / (8.0 * k)) * k.sqrt() / (2.0 * PI * params.ln_q()).sqrt()
}

/// A sector of the plane given by its bisecting direction and half-opening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub bisector: f64,
    pub half_opening: f64,
}

impl Sector {
    /// Distance in angle from the sector to the nearest odd multiple of π,
    /// i.e. to the negative real axis where `exp_q` vanishes.
    pub fn clearance_from_negative_axis(&self) -> f64 {
        let lo = self.bisector - self.half_opening;
        let hi = self.bisector + self.half_opening;
        // odd multiples of π nearest to the interval
        let j = ((lo / PI - 1.0) / 2.0).ceil();
        let first = (2.0 * j + 1.0) * PI;
        if first <= hi {
            return 0.0;
        }
        let below = first - 2.0 * PI;
        (first - hi).min(lo - below)
    }
}

/// Which of the two quantities in the smallness bound for `|Q/R_D|` is binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BindingConstant {
    DiscMinimum,
    FarField,
}

/// Fitted envelope constants of `|exp_q|` on a sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub k0: f64,
    pub k1: f64,
    pub c0: f64,
    pub epsilon: f64,
    pub theta_excl: f64,
    /// `min_{x ≥ q^{1/2}/(q-1)} e^{μ(x)}`, located numerically.
    pub min_exp_mu: f64,
    pub samples: usize,
}

impl GrowthEnvelope {
    /// `min{C0, (ε/K0) min e^μ}`: the admissible ceiling for `|Q(im)/R_D(im)|`.
    pub fn ratio_ceiling(&self) -> (f64, BindingConstant) {
        let far = self.epsilon / self.k0 * self.min_exp_mu;
        if self.c0 <= far {
            (self.c0, BindingConstant::DiscMinimum)
        } else {
            (far, BindingConstant::FarField)
        }
    }

    pub fn lower(&self, x: f64, params: &QParams) -> f64 {
        self.epsilon / self.k0 * mu_growth(x, params).exp()
    }

    pub fn upper(&self, x: f64, params: &QParams) -> f64 {
        self.k1 * mu_growth(x, params).exp()
    }
}

/// Radius `q^{1/2}/(q-1)` separating the disc bound from the far-field bounds.
pub fn envelope_radius(params: &QParams) -> f64 {
    params.q().sqrt() / (params.q() - 1.0)
}

/// Largest radius at which envelope samples are taken.
pub const ENVELOPE_MAX_RADIUS: f64 = 1e4;

/// Sample points `(z, |z|)` used by [`envelope_check`]: a rays × radii grid.
pub fn envelope_samples(sector: &Sector, samples: usize, params: &QParams) -> Vec<Complex64> {
    let samples = samples.max(4);
    let n_rays = ((samples as f64).sqrt().ceil() as usize).max(2);
    let n_radii = samples.div_ceil(n_rays).max(2);
    let r0 = envelope_radius(params);
    let (l0, l1) = (r0.ln(), ENVELOPE_MAX_RADIUS.ln());
    let mut out = Vec::with_capacity(n_rays * n_radii);
    for i in 0..n_rays {
        let phi = sector.bisector - sector.half_opening + 2.0 * sector.half_opening * i as f64 / (n_rays - 1) as f64;
        for j in 0..n_radii {
            let r = (l0 + (l1 - l0) * j as f64 / (n_radii - 1) as f64).exp();
            out.push(Complex64::from_polar(r, phi));
        }
    }
    out
}

/// Minimum of `|exp_q|` over the closed disc of radius `q^{1/2}/(q-1)`.
pub fn disc_minimum(params: &QParams) -> Result<f64, QError> {
    let r0 = envelope_radius(params);
    let n_ang = 720;
    let n_rad = 24;
    let mut min = f64::INFINITY;
    for i in 0..n_ang {
        let phi = 2.0 * PI * i as f64 / n_ang as f64;
        for j in 1..=n_rad {
            let r = r0 * j as f64 / n_rad as f64;
            min = min.min(exp_q(Complex64::from_polar(r, phi), params)?.norm());
        }
    }
    // the minimum modulus sits on the boundary circle; refine there near the negative axis
    let mut lo = PI - 2.0 * PI / n_ang as f64;
    let mut hi = PI + 2.0 * PI / n_ang as f64;
    let f = |phi: f64| exp_q(Complex64::from_polar(r0, phi), params).map(|v| v.norm());
    for _ in 0..60 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a)? < f(b)? {
            hi = b;
        } else {
            lo = a;
        }
    }
    Ok(min.min(f(0.5 * (lo + hi))?))
}

/// Numerical minimum of `e^{μ(x)}` for `x ≥ q^{1/2}/(q-1)`.
pub fn min_exp_mu(params: &QParams) -> f64 {
    let l0 = envelope_radius(params).ln();
    let l1 = ENVELOPE_MAX_RADIUS.ln();
    let n = 4096;
    (0..=n).map(|i| mu_growth((l0 + (l1 - l0) * i as f64 / n as f64).exp(), params)).fold(f64::INFINITY, f64::min).exp()
}

/// Fits the envelope constants of `|exp_q|` on `sector` from `samples` points.
pub fn envelope_check(
    sector: &Sector,
    theta_excl: f64,
    samples: usize,
    params: &QParams,
) -> Result<GrowthEnvelope, QError> {
    if !(theta_excl > 0.0 && theta_excl < PI / 2.0) {
        return Err(QError::InvalidExclusion(theta_excl));
    }
    if !(sector.half_opening > 0.0) {
        return Err(QError::InvalidSector);
    }
    let clearance = sector.clearance_from_negative_axis();
    if clearance < theta_excl {
        return Err(QError::EnvelopeViolation { clearance, theta_excl });
    }
    let epsilon = theta_excl.sin();
    let pts = envelope_samples(sector, samples, params);
    let mut k1: f64 = 0.0;
    let mut k0: f64 = 0.0;
    for z in &pts {
        let v = exp_q(*z, params)?.norm();
        let w = mu_growth(z.norm(), params).exp();
        if !(v > 0.0 && v.is_finite()) {
            return Err(QError::EnvelopeViolation { clearance, theta_excl });
        }
        k1 = k1.max(v / w);
        k0 = k0.max(epsilon * w / v);
    }
    if !(k0.is_finite() && k1.is_finite()) {
        return Err(QError::EnvelopeViolation { clearance, theta_excl });
    }
    Ok(GrowthEnvelope {
        k0,
        k1,
        c0: disc_minimum(params)?,
        epsilon,
        theta_excl,
        min_exp_mu: min_exp_mu(params),
        samples: pts.len(),
    })
}
