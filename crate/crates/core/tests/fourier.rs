use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use qsum::fourier::*;
use qsum::qcore::{CoveringPoint, QParams};
use qsum::series::{Coeff, TruncatedSeries};
use qsum::QError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn decay(beta: f64, mu: f64, m: f64) -> f64 {
    1.0 / weight(m, beta, mu)
}

fn random_fn(rng: &mut ChaCha8Rng, grid: Grid) -> FourierFn {
    let (a, b, w) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0));
    let shift = rng.gen_range(-1.0..1.0);
    FourierFn::from_fn(grid, 1.0, 2.0, |m| c(a, b) * (-(m - shift) * (m - shift) / w).exp()).unwrap()
}

#[test]
fn enorm_examples() {
    let g = Grid::new(5.0, 0.1).unwrap();
    let (beta, mu) = (1.5, 2.5);
    let f = FourierFn::from_fn(g, beta, mu, |m| c(decay(beta, mu, m), 0.0)).unwrap();
    assert!((enorm(&f) - 1.0).abs() < 1e-14);
    assert!((enorm(&f.scale(c(2.0, 0.0))) - 2.0).abs() < 1e-14);
    assert_eq!(enorm(&FourierFn::zeros(g, beta, mu).unwrap()), 0.0);
}

#[test]
fn grid_validation() {
    assert!(Grid::new(1.0, 0.3).is_err());
    assert!(Grid::new(0.0, 0.1).is_err());
    assert!(Grid::new(1.0, -0.1).is_err());
    let g = Grid::new(3.0, 0.5).unwrap();
    assert_eq!(g.len(), 13);
    assert_eq!(g.point(0), -3.0);
    assert_eq!(g.refined().len(), 25);
    let d = Grid::default_for(2.0).unwrap();
    assert!(d.len() >= MIN_GRID_POINTS);
    assert!((-2.0 * d.m_max()).exp() < 1e-10);
    assert!(FourierFn::new(g, 1.0, 2.0, vec![c(0.0, 0.0); 3]).is_err());
    assert!(FourierFn::zeros(g, 1.0, 1.0).is_err());
}

#[test]
fn convolution_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = Grid::new(8.0, 0.05).unwrap();
    for _ in 0..5 {
        let a = random_fn(&mut rng, g);
        let b = random_fn(&mut rng, g);
        let ab = convolve(&a, &b).unwrap();
        let ba = convolve(&b, &a).unwrap();
        assert!(ab.max_diff(&ba) < 1e-12);
        // the normalized convolution stays in the space
        let n = enorm(&ab.scale(c(1.0 / (2.0 * PI).sqrt(), 0.0)));
        assert!(n.is_finite() && n <= 10.0 * enorm(&a) * enorm(&b));
    }
}

#[test]
fn convolution_grid_mismatch() {
    let a = FourierFn::zeros(Grid::new(1.0, 0.5).unwrap(), 1.0, 2.0).unwrap();
    let b = FourierFn::zeros(Grid::new(1.0, 0.25).unwrap(), 1.0, 2.0).unwrap();
    assert!(matches!(convolve(&a, &b), Err(QError::GridMismatch(_))));
}

fn gaussian_conv_error(step: f64) -> f64 {
    let g = Grid::new(12.0, step).unwrap();
    let h = FourierFn::from_fn(g, 1.0, 2.0, |m| c((-m * m / 2.0).exp(), 0.0)).unwrap();
    let conv = convolve(&h, &h).unwrap();
    [0.0, 1.0, 2.0]
        .iter()
        .map(|&m| (conv.eval(m) - c(PI.sqrt() * (-m * m / 4.0).exp(), 0.0)).norm())
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_convolution_oracle() {
    assert!(gaussian_conv_error(0.01) < 1e-6);
}

#[test]
fn off_node_convolution_converges_quadratically() {
    // a Gaussian sampled on a shifted lattice has no exact trapezoid sum,
    // so compare a product against a function with a kink
    let err = |step: f64| {
        let g = Grid::new(12.0, step).unwrap();
        let h = FourierFn::from_fn(g, 1.0, 2.0, |m| c((-m.abs()).exp(), 0.0)).unwrap();
        let conv = convolve(&h, &h).unwrap();
        // e^{-|m|} ⋆ e^{-|m|} = (1 + |m|) e^{-|m|}
        [0.0, 1.0, 2.0].iter().map(|&m| (conv.eval(m).re - (1.0 + m) * (-m).exp()).abs()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(0.1), err(0.05));
    assert!(coarse / fine >= 3.5, "{coarse} / {fine}");
}

#[test]
fn inverse_fourier_of_gaussian_is_itself() {
    let g = Grid::new(12.0, 0.01).unwrap();
    let f = FourierFn::from_fn(g, 1.0, 2.0, |m| c((-m * m / 2.0).exp(), 0.0)).unwrap();
    for x in [0.0, 1.0] {
        let v = inverse_fourier_eval(&f, c(x, 0.0), 0.5).unwrap();
        assert!((v - c((-x * x / 2.0).exp(), 0.0)).norm() < 1e-8);
    }
    let z = FourierFn::zeros(g, 1.0, 2.0).unwrap();
    assert_eq!(inverse_fourier_eval(&z, c(0.3, 0.2), 0.5).unwrap(), c(0.0, 0.0));
}

#[test]
fn strip_violation() {
    let g = Grid::new(2.0, 0.5).unwrap();
    let f = FourierFn::zeros(g, 1.0, 2.0).unwrap();
    assert!(matches!(inverse_fourier_eval(&f, c(0.0, 0.6), 0.5), Err(QError::StripViolation { .. })));
    assert!(matches!(inverse_fourier_eval(&f, c(0.0, 0.1), 1.0), Err(QError::StripViolation { .. })));
}

#[test]
fn derivative_rule() {
    let g = Grid::new(12.0, 0.01).unwrap();
    let f = FourierFn::from_fn(g, 1.0, 2.0, |m| c((-m * m / 2.0).exp() * (1.0 + 0.3 * m), 0.0)).unwrap();
    let df = f.mul_fn(|m| c(0.0, m));
    let z = c(0.3, 0.1);
    let h = 1e-4;
    let fd =
        (inverse_fourier_eval(&f, z + h, 0.5).unwrap() - inverse_fourier_eval(&f, z - h, 0.5).unwrap()) / (2.0 * h);
    assert!((inverse_fourier_eval(&df, z, 0.5).unwrap() - fd).norm() < 1e-5);
}

#[test]
fn series_norm_examples() {
    let g = Grid::new(4.0, 0.1).unwrap();
    let unit = FourierFn::from_fn(g, 1.0, 2.0, |m| c(decay(1.0, 2.0, m), 0.0)).unwrap();
    let w = TruncatedSeries::new(unit.clone(), vec![unit.clone()]).unwrap();
    assert!((series_norm_1r(&w, 0.5) - 0.5).abs() < 1e-14);
    assert_eq!(series_norm_1r(&TruncatedSeries::zeros(unit.clone(), 3), 0.5), 0.0);
}

#[test]
fn series_norm_triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Grid::new(6.0, 0.1).unwrap();
    for _ in 0..10 {
        let w = TruncatedSeries::new(random_fn(&mut rng, g), (0..4).map(|_| random_fn(&mut rng, g)).collect()).unwrap();
        let v = TruncatedSeries::new(random_fn(&mut rng, g), (0..4).map(|_| random_fn(&mut rng, g)).collect()).unwrap();
        let r = rng.gen_range(0.1..2.0);
        let sum = w.add(&v).unwrap();
        assert!(series_norm_1r(&sum, r) <= series_norm_1r(&w, r) + series_norm_1r(&v, r) + 1e-12);
    }
}

#[test]
fn sector_norm_examples() {
    let p = QParams::new(2.0, 1).unwrap();
    let g = Grid::new(4.0, 0.1).unwrap();
    let unit = FourierFn::from_fn(g, 1.0, 2.0, |m| c(decay(1.0, 2.0, m), 0.0)).unwrap();
    let alpha = 0.7;

    // ω = τ · unit: value 1 at |τ| = 1
    let at_one = vec![(CoveringPoint::new(1.0, 0.2).unwrap(), unit.clone())];
    assert!((series_norm_sector(&at_one, alpha, 0.5, &p) - 1.0).abs() < 1e-14);
    let zero = vec![(CoveringPoint::new(3.0, 0.0).unwrap(), unit.zero_like())];
    assert_eq!(series_norm_sector(&zero, alpha, 0.5, &p), 0.0);

    // ω = τ exp(k log²|τ|/(2 log q)) unit: per-sample value is |τ|^{-α}
    let rate = p.gauss_rate();
    let radii = [0.5, 1.0, 2.0, 5.0, 20.0];
    let samples: Vec<_> = radii
        .iter()
        .map(|&r| {
            let l = f64::ln(r);
            (CoveringPoint::new(r, 0.1).unwrap(), unit.scale(c(r * (rate * l * l).exp(), 0.0)))
        })
        .collect();
    let want = radii.iter().filter(|&&r| r >= 0.8).map(|&r| r.powf(-alpha)).fold(0.0, f64::max);
    assert!((series_norm_sector(&samples, alpha, 0.8, &p) - want).abs() < 1e-12 * want);
}

#[test]
fn convolution_weight_bound_is_stable() {
    let coarse = convolution_weight_bound(2.0, 1.0, 1, &Grid::new(40.0, 0.1).unwrap());
    let fine = convolution_weight_bound(2.0, 1.0, 1, &Grid::new(40.0, 0.05).unwrap());
    assert!(coarse.is_finite() && fine.is_finite());
    assert!((coarse - fine).abs() / fine < 0.05, "{coarse} vs {fine}");
}

#[test]
fn json_and_csv() {
    let g = Grid::new(1.0, 0.5).unwrap();
    let f = FourierFn::from_fn(g, 1.0, 2.0, |m| c(m, -m)).unwrap();
    let text = serde_json::to_string(&f).unwrap();
    let back: FourierFn = serde_json::from_str(&text).unwrap();
    assert_eq!(f, back);
    let csv = f.to_csv();
    assert!(csv.starts_with("m,re,im\n-1,-1,1\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn interpolation_and_resampling() {
    let g = Grid::new(2.0, 0.5).unwrap();
    let f = FourierFn::from_fn(g, 1.0, 2.0, |m| c(2.0 * m + 1.0, 0.0)).unwrap();
    assert!((f.eval(0.3) - c(1.6, 0.0)).norm() < 1e-14);
    assert_eq!(f.eval(3.0), c(0.0, 0.0));
    let r = f.resample(g.refined());
    assert!((r.eval(0.25) - c(1.5, 0.0)).norm() < 1e-14);
}

proptest! {
    #[test]
    fn enorm_is_a_norm(seed in 0u64..1000, s_re in -3.0f64..3.0, s_im in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::new(5.0, 0.1).unwrap();
        let a = random_fn(&mut rng, g);
        let b = random_fn(&mut rng, g);
        let s = c(s_re, s_im);
        prop_assert!((enorm(&a.scale(s)) - s.norm() * enorm(&a)).abs() <= 1e-12 * (1.0 + enorm(&a)));
        prop_assert!(enorm(&a.add(&b)) <= enorm(&a) + enorm(&b) + 1e-12);
    }
}
