//! Trapezoid quadrature with node doubling.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::QError;

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: Complex64,
    /// `|I_n - I_{n/2}|`, the change from the previous (coarser) rule.
    pub error: f64,
    /// Number of intervals of the final rule.
    pub intervals: usize,
}

impl Estimate {
    pub fn exact(value: Complex64) -> Self {
        Estimate { value, error: 0.0, intervals: 0 }
    }
}

fn finite(v: Complex64, x: f64) -> Result<Complex64, QError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QError::NonFinite { s: x })
    }
}

fn sum_trapezoid(vals: &[Complex64], h: f64) -> Complex64 {
    let n = vals.len();
    let inner: Complex64 = vals[1..n - 1].iter().sum();
    (inner + 0.5 * (vals[0] + vals[n - 1])) * h
}

/// Trapezoid rule with `intervals` intervals; the error estimate compares
/// against the rule on every other node.
pub fn trapezoid_fixed<F>(f: F, lo: f64, hi: f64, intervals: usize) -> Result<Estimate, QError>
where
    F: Fn(f64) -> Result<Complex64, QError> + Sync,
{
    let n = intervals.max(2) & !1;
    let h = (hi - lo) / n as f64;
    let vals: Vec<Complex64> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let x = lo + i as f64 * h;
            finite(f(x)?, x)
        })
        .collect::<Result<_, _>>()?;
    let fine = sum_trapezoid(&vals, h);
    let coarse_vals: Vec<Complex64> = vals.iter().step_by(2).copied().collect();
    let coarse = sum_trapezoid(&coarse_vals, 2.0 * h);
    Ok(Estimate { value: fine, error: (fine - coarse).norm(), intervals: n })
}

/// Doubles the number of intervals (reusing nodes) until two successive
/// rules agree within `tol_abs + tol_rel |I|`.
pub fn trapezoid_refined<F>(
    f: F,
    lo: f64,
    hi: f64,
    intervals: usize,
    tol_abs: f64,
    tol_rel: f64,
    max_doublings: usize,
) -> Result<Estimate, QError>
where
    F: Fn(f64) -> Result<Complex64, QError> + Sync,
{
    let mut n = intervals.max(2);
    let mut h = (hi - lo) / n as f64;
    let mut vals: Vec<Complex64> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let x = lo + i as f64 * h;
            finite(f(x)?, x)
        })
        .collect::<Result<_, _>>()?;
    let mut prev = sum_trapezoid(&vals, h);
    let mut diff = f64::INFINITY;
    for _ in 0..max_doublings {
        let mids: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = lo + (i as f64 + 0.5) * h;
                finite(f(x)?, x)
            })
            .collect::<Result<_, _>>()?;
        let mut merged = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            merged.push(vals[i]);
            merged.push(mids[i]);
        }
        merged.push(vals[n]);
        vals = merged;
        n *= 2;
        h /= 2.0;
        let cur = sum_trapezoid(&vals, h);
        diff = (cur - prev).norm();
        if diff <= tol_abs + tol_rel * cur.norm() {
            return Ok(Estimate { value: cur, error: diff, intervals: n });
        }
        prev = cur;
    }
    Err(QError::QuadratureStall { diff })
}
