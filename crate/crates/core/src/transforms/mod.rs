//! Analytic transforms by quadrature.
//!
//! Ray integrals run in `s = log|u|`, where `Θ_k(T/u)` is a Gaussian in `s`.
//! Contour integrals over the covering circle `x = r e^{it}`, `t ∈ ℝ`, run in
//! `t` with increasing orientation; with `dx/x = i dt` the prefactor
//! `-i·q^{1/(8κ)}√κ/√(2π log q)` becomes real and positive, which is the
//! orientation under which `B(x^n)(ξ) = ξ^n / q^{n(n-1)/(2κ)}`.

mod gq;
pub mod quad;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::QError;
use crate::qcore::{pi_qk, theta_kernel_log, CoveringPoint, QParams};

pub use gq::*;
pub use quad::{trapezoid_fixed, trapezoid_refined, Estimate};

/// Gaussian tail exponent used to size integration windows (`e^{-50}`).
pub const WINDOW_EXPONENT: f64 = 50.0;

/// Quadrature along the ray `arg u = θ_d`, in `s = log|u| ∈ [s_min, s_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayQuadrature {
    pub theta_d: f64,
    pub s_min: f64,
    pub s_max: f64,
    /// Initial number of intervals.
    pub nodes: usize,
    /// Number of node doublings allowed; zero means a fixed rule.
    pub max_doublings: usize,
    /// Largest `|T|` the caller certifies.
    pub certified_radius: f64,
}

impl RayQuadrature {
    /// Window around the peak of `|Θ_k(T/u) u^n|` wide enough for a
    /// Gaussian tail below `e^{-50}`; `growth` is the power `n` of the integrand near the peak.
    pub fn around(t: CoveringPoint, theta_d: f64, growth: f64, params: &QParams) -> Self {
        let a = params.gauss_rate();
        let peak = t.r().ln() + (growth - 0.5) / (2.0 * a);
        let w = (WINDOW_EXPONENT / a).sqrt();
        let nodes = ((2.0 * w) / (0.25 / a.sqrt().max(1.0))).ceil() as usize;
        RayQuadrature {
            theta_d,
            s_min: peak - w,
            s_max: peak + w,
            nodes: nodes.max(32),
            max_doublings: 8,
            certified_radius: f64::INFINITY,
        }
    }

    pub fn fixed(mut self, intervals: usize) -> Self {
        self.nodes = intervals;
        self.max_doublings = 0;
        self
    }

    pub fn point(&self, s: f64) -> CoveringPoint {
        CoveringPoint::new(s.exp(), self.theta_d).expect("finite ray point")
    }
}

/// Quadrature over the covering circle of radius `radius`, `t ∈ [theta_min, theta_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleContour {
    pub radius: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub nodes: usize,
    pub max_doublings: usize,
}

impl CircleContour {
    /// Window centred at `center` for a kernel of order `kappa`.
    pub fn around(radius: f64, center: f64, kappa: f64, params: &QParams) -> Self {
        let a = kappa / (2.0 * params.ln_q());
        let w = (WINDOW_EXPONENT / a).sqrt();
        CircleContour { radius, theta_min: center - w, theta_max: center + w, nodes: 64, max_doublings: 10 }
    }

    /// Circle through the saddle point of the order-`kappa` kernel against `x^j`
    /// at `xi`: `r = |ξ| exp(-(j - 1/2)/(2a))`, where the integrand stops oscillating.
    pub fn saddle(xi: CoveringPoint, j: f64, kappa: f64, params: &QParams) -> Self {
        let a = kappa / (2.0 * params.ln_q());
        Self::around(xi.r() * (-(j - 0.5) / (2.0 * a)).exp(), xi.theta(), kappa, params)
    }

    pub fn fixed(mut self, intervals: usize) -> Self {
        self.nodes = intervals;
        self.max_doublings = 0;
        self
    }
}

/// Runs a fixed or doubling trapezoid rule as configured.
pub(crate) fn integrate<F>(
    f: F,
    lo: f64,
    hi: f64,
    nodes: usize,
    max_doublings: usize,
    params: &QParams,
) -> Result<Estimate, QError>
where
    F: Fn(f64) -> Result<Complex64, QError> + Sync,
{
    if max_doublings == 0 {
        trapezoid_fixed(f, lo, hi, nodes)
    } else {
        trapezoid_refined(f, lo, hi, nodes, params.eps_abs() * 1e-3, params.eps_rel() * 1e-2, max_doublings)
    }
}

/// `π_{q,k} ∫_{L_θd} Θ_k(T/u) f(u) du/u`.
pub fn q_laplace<F>(f: F, t: CoveringPoint, quad: &RayQuadrature, params: &QParams) -> Result<Estimate, QError>
where
    F: Fn(CoveringPoint) -> Result<Complex64, QError> + Sync,
{
    if t.r() > quad.certified_radius {
        return Err(QError::DomainTooLarge { r: t.r(), radius: quad.certified_radius });
    }
    let pi = pi_qk(params);
    let lt = t.ln();
    let integrand = |s: f64| {
        let u = quad.point(s);
        let l = lt - Complex64::new(s, quad.theta_d);
        Ok(theta_kernel_log(l, params) * f(u)?)
    };
    let mut e = integrate(integrand, quad.s_min, quad.s_max, quad.nodes, quad.max_doublings, params)?;
    e.value *= pi;
    e.error *= pi;
    Ok(e)
}

/// `q^{1/(8κ)} √κ / √(2π log q)`: the Borel prefactor after `-i · (i dt)`.
pub fn borel_constant(kappa: f64, params: &QParams) -> f64 {
    params.q().powf(1.0 / (8.0 * kappa)) * kappa.sqrt() / (2.0 * PI * params.ln_q()).sqrt()
}

/// Analytic q-Borel transform of real order `kappa` over the covering circle.
pub fn q_borel_order<F>(
    phi: F,
    xi: CoveringPoint,
    contour: &CircleContour,
    kappa: f64,
    params: &QParams,
) -> Result<Estimate, QError>
where
    F: Fn(CoveringPoint) -> Result<Complex64, QError> + Sync,
{
    let a = kappa / (2.0 * params.ln_q());
    let c = borel_constant(kappa, params);
    let lr = (contour.radius / xi.r()).ln();
    let integrand = |t: f64| {
        let l = Complex64::new(lr, t - xi.theta());
        let x = CoveringPoint::new(contour.radius, t)?;
        Ok((a * l * l - 0.5 * l).exp() * phi(x)?)
    };
    let mut e =
        integrate(integrand, contour.theta_min, contour.theta_max, contour.nodes, contour.max_doublings, params)?;
    e.value *= c;
    e.error *= c;
    Ok(e)
}

/// Analytic q-Borel transform of order `k`.
pub fn q_borel_analytic<F>(
    phi: F,
    xi: CoveringPoint,
    contour: &CircleContour,
    params: &QParams,
) -> Result<Estimate, QError>
where
    F: Fn(CoveringPoint) -> Result<Complex64, QError> + Sync,
{
    q_borel_order(phi, xi, contour, params.k() as f64, params)
}

/// `k' = k/(p²-1)` and `k'' = (p²-p)/(2k)` of the deceleration operator.
pub fn deceleration_orders(p: u32, k: u32) -> (f64, f64) {
    let p = p as f64;
    let k = k as f64;
    (k / (p * p - 1.0), (p * p - p) / (2.0 * k))
}

/// `D̂_p(f)(h)` as the order-`k'` Borel transform of `x ↦ f(x / q^{k''})`.
///
/// `f_radius` is the radius of the disc on which `f` is trusted; the shifted
/// contour has to stay inside it.
pub fn deceleration_integral<F>(
    f: F,
    p: u32,
    h: CoveringPoint,
    contour: &CircleContour,
    f_radius: f64,
    params: &QParams,
) -> Result<Estimate, QError>
where
    F: Fn(Complex64) -> Result<Complex64, QError> + Sync,
{
    if p < 2 {
        return Err(QError::BadMahlerPower(p));
    }
    let (k1, k2) = deceleration_orders(p, params.k());
    let shrink = params.q().powf(-k2);
    if contour.radius * shrink >= f_radius {
        return Err(QError::DomainViolation { r: contour.radius * shrink, radius: f_radius });
    }
    q_borel_order(|x| f(x.to_complex() * shrink), h, contour, k1, params)
}

/// Least-squares fit `log|err_N| - N log|t| ≈ c0 + c1 N + c2 N²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevreyFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// `log q / (2k)`, the predicted `N²` coefficient.
    pub target: f64,
    pub rel_error: f64,
}

pub fn gevrey_fit(errors: &[(usize, f64)], t_abs: f64, params: &QParams) -> GevreyFit {
    // normal equations for the basis (1, N, N²)
    let mut m = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for &(n, e) in errors {
        let x = n as f64;
        let basis = [1.0, x, x * x];
        let y = e.ln() - x * t_abs.ln();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            b[i] += basis[i] * y;
        }
    }
    let c = solve3(m, b);
    let target = params.ln_q() / (2.0 * params.k() as f64);
    GevreyFit { c0: c[0], c1: c[1], c2: c[2], target, rel_error: (c[2] - target).abs() / target }
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x
}
