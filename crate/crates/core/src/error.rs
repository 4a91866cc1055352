use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("q must be a finite real number > 1, got {0}")]
    InvalidQ(f64),
    #[error("the order k must be a positive integer")]
    InvalidOrder,
    #[error("tolerances must be positive and finite")]
    InvalidTolerance,
    #[error("covering point needs r > 0 and finite angle, got r={r}, theta={theta}")]
    InvalidPoint { r: f64, theta: f64 },
    #[error("q-factorial overflows at n={n}")]
    Overflow { n: u32 },
    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },
    #[error("excluded half-angle must lie in (0, pi/2), got {0}")]
    InvalidExclusion(f64),
    #[error("sector half-opening must be positive")]
    InvalidSector,
    #[error("sector comes within {clearance} rad of the zero line of exp_q (needs {theta_excl})")]
    EnvelopeViolation { clearance: f64, theta_excl: f64 },

    #[error("coefficient spaces differ: {0}")]
    SpaceMismatch(String),
    #[error("operation needs target order >= {needed}, got {given}")]
    OrderBudget { needed: usize, given: usize },
    #[error("Mahler exponent must be >= 2, got {0}")]
    BadMahlerPower(u32),

    #[error("grids differ: {0}")]
    GridMismatch(String),
    #[error("|Im z| = {im} is outside the strip of width {beta}")]
    StripViolation { im: f64, beta: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("problem specification violates {condition}: {detail}")]
    InvalidSpec { condition: String, detail: String },
    #[error("direction {d} cannot keep the image sector away from the zeros of exp_q")]
    BadDirection { d: f64 },
    #[error("measured delta_1 = {delta1} is below eps_abs")]
    SmallDelta { delta1: f64 },
    #[error("lower bound violated at tau={tau_re}+{tau_im}i, m={m}: ratio {ratio} < {bound}")]
    BoundViolation { tau_re: f64, tau_im: f64, m: f64, ratio: f64, bound: f64 },
    #[error("leading Taylor coefficient {0} of P_m is too small to invert")]
    DivergentInversion(f64),

    #[error("Picard iteration stopped contracting (ratios {ratios:?})")]
    NoContraction { ratios: Vec<f64> },
    #[error("order {order} exceeds the configured budget {budget}")]
    OrderOverflow { order: usize, budget: usize },

    #[error("quadrature did not stabilise: last two estimates differ by {diff}")]
    QuadratureStall { diff: f64 },
    #[error("integrand left the floating-point range at s = {s}")]
    NonFinite { s: f64 },
    #[error("|T| = {r} exceeds the certified radius {radius}")]
    DomainTooLarge { r: f64, radius: f64 },
    #[error("shifted contour point at radius {r} leaves the certified disc {radius}")]
    DomainViolation { r: f64, radius: f64 },
    #[error("quadrature node within eps of a zero of exp_q at {re}+{im}i")]
    ZeroDivision { re: f64, im: f64 },
}
