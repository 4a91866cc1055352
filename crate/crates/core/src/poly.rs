use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real polynomial stored low-to-high, evaluated at complex points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// Degree ignoring trailing zeros; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// `P(im)`, the symbol of `P(∂_z)` acting on `e^{imz}`.
    pub fn symbol(&self, m: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, m))
    }
}
