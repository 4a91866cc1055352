//! q-Borel–Laplace summation for linear q-difference–Mahler equations.
//!
//! The crate is organised bottom-up:
//!
//! - [`qcore`]: q-numbers, `exp_q`, the kernel `Θ_k`, growth envelopes.
//! - [`series`]: truncated formal series and the formal transforms.
//! - [`fourier`]: the coefficient space `E_(β,μ)` on a grid.
//! - [`geometry`]: problem data, the symbol `P_m(τ)` and sector selection.
//! - [`solver`]: the Borel-plane fixed point and the formal solution.
//! - [`transforms`]: quadrature for q-Laplace, q-Borel, deceleration and
//!   the `G_q`-sum, plus the residual checks built on them.
//!
//! ```
//! use num_complex::Complex64;
//! use qsum::qcore::{exp_q, QParams};
//!
//! let p = QParams::new(2.0, 1).unwrap();
//! // exp_q vanishes at -q/(q-1)
//! assert!(exp_q(Complex64::new(-2.0, 0.0), &p).unwrap().norm() < 1e-11);
//! ```

pub mod error;
pub mod fourier;
pub mod geometry;
pub mod input;
pub mod poly;
pub mod qcore;
pub mod series;
pub mod solver;
pub mod transforms;

pub use error::QError;
