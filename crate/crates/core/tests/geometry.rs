mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use qsum::geometry::*;
use qsum::input::ProblemFile;
use qsum::poly::Poly;
use qsum::qcore::{exp_q_zero, q_factorial};
use qsum::QError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn simple(q: f64, q_poly: &[f64], r_d: &[f64], alpha_d: f64, d_d: u32) -> ProblemSpec {
    let text = format!(
        r#"{{"q": {q}, "k": 1, "beta": 2.0, "mu": 2.0, "grid": {{"M": 5.0, "step": 0.1}},
            "Q": {q_poly:?}, "R_D": {r_d:?}, "alpha_d": {alpha_d}, "d_d": {d_d}}}"#
    );
    ProblemFile::from_json(&text).unwrap().build(None).unwrap()
}

/// `Σ z^n/[n]_q!` summed until the terms are negligible.
fn exp_q_oracle(z: Complex64, q: f64) -> Complex64 {
    let mut sum = c(0.0, 0.0);
    for n in 0..120u32 {
        let t = z.powu(n) / q_factorial(n, q).unwrap();
        sum += t;
        if n > 5 && t.norm() < 1e-20 {
            break;
        }
    }
    sum
}

#[test]
fn pm_examples() {
    let spec = simple(2.0, &[0.1, 0.05], &[1.0, 1.0], 0.01, 1);
    for m in [-2.0, 0.0, 1.5] {
        let want = spec.q_poly.symbol(m) - spec.r_d.symbol(m);
        assert!((eval_pm(c(0.0, 0.0), m, &spec).unwrap() - want).norm() < 1e-15);
    }

    // second term vanishes at a zero of exp_q
    let spec = simple(2.0, &[2.0], &[1.0], 0.5, 1);
    let tau = c(exp_q_zero(0, &spec.params) / spec.alpha_tilde(), 0.0);
    assert!((eval_pm(tau, 0.7, &spec).unwrap() - c(2.0, 0.0)).norm() < 1e-12);
}

#[test]
fn pm_matches_recomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for seed in 0..5 {
        let spec = common::random_problem(seed).build(None).unwrap();
        for _ in 0..20 {
            let tau = Complex64::from_polar(rng.gen_range(0.0..spec.rho_max()), rng.gen_range(-PI..PI));
            let m = rng.gen_range(-10.0..10.0);
            let z = spec.alpha_tilde() * tau.powu(spec.d_d);
            let e = exp_q_oracle(z, spec.params.q());
            let want = spec.q_poly.symbol(m) - e * spec.r_d.symbol(m);
            let got = eval_pm(tau, m, &spec).unwrap();
            // exp_q stops once a term drops under eps_abs
            let tol = 4.0 * spec.params.eps_abs() * (1.0 + e.norm()) * spec.r_d.symbol(m).norm();
            assert!((got - want).norm() <= tol, "{got} vs {want}");
        }
    }
}

#[test]
fn rho_formula() {
    let spec = simple(2.0, &[0.05], &[1.0], 1.0, 2);
    assert!((spec.alpha_tilde() - 0.5).abs() < 1e-15);
    assert!((spec.rho_max() - 2f64.powf(0.75)).abs() < 1e-14);
}

#[test]
fn sector_selection() {
    let spec = simple(2.0, &[0.05], &[1.0], 1.0, 2);
    let cfg = select_sector(&spec, 0.0).unwrap();
    assert!(cfg.half_opening > 0.0 && cfg.half_opening <= PI / 8.0);
    assert!(cfg.r > 0.0 && cfg.r < cfg.rho);
    assert!(cfg.delta1 > 0.0);

    assert!(matches!(select_sector(&spec, PI / 2.0), Err(QError::BadDirection { .. })));
}

#[test]
fn delta1_is_stable_under_refinement() {
    let spec = common::random_problem(2).build(None).unwrap();
    let cfg = select_sector(&spec, 0.0).unwrap();
    let dense = SampleDensity::default().doubled();
    let (refined, _, _) = measure_delta1(&spec, cfg.d, cfg.half_opening, cfg.rho, dense).unwrap();
    assert!((refined - cfg.delta1).abs() < 0.01 * cfg.delta1);
}

#[test]
fn lower_bounds_hold_with_a_gap() {
    let spec = common::random_problem(4).build(None).unwrap();
    let cfg = select_sector(&spec, 0.0).unwrap();
    // 80 × 80 sector samples plus the disc: more than 10⁴ points
    let report = pm_lower_bound_report(&spec, &cfg, SampleDensity { rays: 80, radii: 80 }).unwrap();
    assert!(report.r2 < report.ratio_ceiling);
    assert!(report.min_ratio >= cfg.delta1 * (1.0 - DELTA1_SLACK));
    assert!(report.far_constant > 0.0);
    assert_eq!(report.far_field.len(), 80);
    let last = report.far_field.last().unwrap().0;
    assert!((last / cfg.rho - 100.0).abs() < 1e-9);
}

#[test]
fn lower_bounds_fail_without_a_gap() {
    let (_, spec) = common::load("ratio_gap");
    let cfg = select_sector(&spec, 0.0).unwrap();
    let err = pm_lower_bound_report(&spec, &cfg, SampleDensity::default()).unwrap_err();
    assert!(matches!(err, QError::BoundViolation { .. }), "{err:?}");
}

#[test]
fn structural_conditions() {
    let good = common::random_problem(0);
    assert!(good.build(None).unwrap().validate().is_ok());

    let mut f = good.clone();
    f.mahler_terms[0].l1 = f.mahler_terms[0].l0 as i32;
    assert!(
        matches!(f.build(None).unwrap().validate(), Err(QError::InvalidSpec { condition, .. }) if condition == "shift_order")
    );

    let mut f = good.clone();
    f.r_d = Poly(vec![1.0]);
    let err = f.build(None).unwrap().validate();
    assert!(matches!(err, Err(QError::InvalidSpec { condition, .. }) if condition == "symbol_degrees"));

    let mut f = good.clone();
    f.q_poly = Poly(vec![0.0, 1.0]);
    let err = f.build(None).unwrap().validate();
    assert!(matches!(err, Err(QError::InvalidSpec { condition, .. }) if condition == "nonvanishing_symbols"));

    // ℓ₂ = 2 with k = 1 needs d_D² · 3 > 1, which d_D = 1 meets; ℓ₂ = 0 never does
    let mut f = good.clone();
    f.mahler_terms[0].l2 = 0;
    let err = f.build(None).unwrap().validate();
    assert!(matches!(err, Err(QError::InvalidSpec { condition, .. }) if condition == "mahler_degree"));

    let checks = good.build(None).unwrap().structural_checks();
    assert_eq!(checks.iter().map(|c| c.condition.as_str()).collect::<Vec<_>>(), &CONDITIONS[..5]);
}

#[test]
fn inverse_taylor_examples() {
    let spec = simple(2.0, &[0.1, 0.05], &[1.0, 1.0], 0.01, 1);
    for m in [-1.0, 0.0, 2.0] {
        let f = inv_pm_taylor(m, &spec, 4).unwrap();
        let want = 1.0 / (spec.q_poly.symbol(m) - spec.r_d.symbol(m));
        assert!((f[0] - want).norm() < 1e-14 * want.norm());
    }

    let a = 0.3;
    let spec = simple(2.0, &[2.0], &[1.0], a, 1);
    let f = inv_pm_taylor(0.0, &spec, 3).unwrap();
    assert!((f[0] - c(1.0, 0.0)).norm() < 1e-15);
    assert!((f[1] - c(a, 0.0)).norm() < 1e-15);

    let degenerate = simple(2.0, &[1.0], &[1.0], a, 1);
    assert!(matches!(inv_pm_taylor(0.0, &degenerate, 3), Err(QError::DivergentInversion(_))));
}

#[test]
fn inverse_taylor_matches_cauchy_integrals() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for seed in [1, 3] {
        let spec = common::random_problem(seed).build(None).unwrap();
        let r1 = spec.rho_max() / 2.0;
        for _ in 0..4 {
            let m = rng.gen_range(-10.0..10.0);
            let f = inv_pm_taylor(m, &spec, 10).unwrap();
            let nodes = 512;
            // f_p = (1/2π) ∫ P(R₁e^{iθ})^{-1} R₁^{-p} e^{-ipθ} dθ
            let vals: Vec<Complex64> = (0..nodes)
                .map(|j| {
                    1.0 / eval_pm(Complex64::from_polar(r1, 2.0 * PI * j as f64 / nodes as f64), m, &spec).unwrap()
                })
                .collect();
            let scale = f.iter().enumerate().map(|(p, v)| v.norm() * r1.powi(p as i32)).fold(0.0, f64::max);
            for (p, fp) in f.iter().enumerate() {
                let oracle: Complex64 = (0..nodes)
                    .map(|j| {
                        vals[j] * Complex64::from_polar(r1.powi(-(p as i32)), -2.0 * PI * (j * p) as f64 / nodes as f64)
                    })
                    .sum::<Complex64>()
                    / nodes as f64;
                assert!((fp - oracle).norm() * r1.powi(p as i32) < 1e-9 * scale, "seed {seed} p {p}");
            }
        }
    }
}

#[test]
fn inverse_taylor_reconstructs_one() {
    for seed in 0..4 {
        let spec = common::random_problem(seed).build(None).unwrap();
        let n = 12;
        for m in [-3.0, 0.0, 4.5] {
            let p = pm_taylor(m, &spec, n).unwrap();
            let f = inv_pm_taylor(m, &spec, n).unwrap();
            let r1 = spec.rho_max() / 2.0;
            for i in 0..=n {
                let prod: Complex64 = (0..=i).map(|j| p[j] * f[i - j]).sum();
                let want = if i == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) };
                // coefficients of size R₁^{-i}
                assert!((prod - want).norm() * r1.powi(i as i32) < 1e-9, "seed {seed} m {m} i {i}");
            }
        }
    }
}

#[test]
fn inverse_taylor_bound_is_uniform() {
    let spec = common::random_problem(5).build(None).unwrap();
    let r1 = spec.rho_max() / 2.0;
    let cp = inv_pm_bound(&spec, 12, r1).unwrap();
    assert!(cp.is_finite() && cp > 0.0);
    let grid = inv_pm_taylor_grid(&spec, 12).unwrap();
    assert_eq!(grid.len(), 13);
    let deg = spec.r_d.degree() as i32;
    for (p, fp) in grid.iter().enumerate() {
        for (i, v) in fp.values().iter().enumerate() {
            let m = spec.grid.point(i);
            assert!(v.norm() * r1.powi(p as i32) * (1.0 + m.abs()).powi(deg) <= cp * (1.0 + 1e-12));
        }
    }
}

#[test]
fn sector_samples_cover_disc_and_rays() {
    let s = sector_samples(0.3, 0.1, 2.0, SampleDensity { rays: 4, radii: 5 });
    assert_eq!(s.len(), 2 * 4 * 5 + 1);
    assert!(s.iter().any(|z| z.norm() == 0.0));
    assert!(s.iter().all(|z| z.norm() <= 200.0 * (1.0 + 1e-12)));
}
