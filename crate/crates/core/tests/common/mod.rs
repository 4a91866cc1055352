#![allow(dead_code)]

use std::path::{Path, PathBuf};

use qsum::geometry::ProblemSpec;
use qsum::input::{FnSource, ForcingSpec, GridSpec, ProblemFile, TermSpec};
use qsum::poly::Poly;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.json"))
}

pub fn load(name: &str) -> (ProblemFile, ProblemSpec) {
    let file = ProblemFile::read(&fixture_path(name)).expect("fixture parses");
    let spec = file.build(None).expect("fixture builds");
    (file, spec)
}

/// A problem in the small-coupling regime, drawn from `seed`.
///
/// `Q/R_D` stays in `[0.03, 0.09]`, well under the envelope ceiling. Each
/// Mahler coefficient is scaled against the powers of `R ≈ 1/√2 α̃^{-1}` that
/// the term picks up in the `(1,R)` norm and against `1/|Q(im)|`, the size of
/// `1/P_m` near the origin, so the coupling is a few percent.
pub fn random_problem(seed: u64) -> ProblemFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q: f64 = 2.0;
    let alpha_d = rng.gen_range(5e-4..2e-3);
    let r_est = std::f64::consts::FRAC_1_SQRT_2 / alpha_d;

    let b = rng.gen_range(0.3..1.5);
    let c1 = rng.gen_range(0.03..0.09);
    let c2 = b * rng.gen_range(0.03..0.09);

    let mut terms = Vec::new();
    let l0 = rng.gen_range(1..=2u32);
    let l1 = l0 as i32 - rng.gen_range(1..=2);
    terms.push(TermSpec {
        l0,
        l1,
        l2: 1,
        r: Poly(vec![1.0]),
        a: FnSource::Gaussian {
            scale: c1 * rng.gen_range(0.05..0.2) * coupling_scale(q, l0, l1, 1, r_est),
            width: rng.gen_range(0.7..1.3),
        },
    });
    if rng.gen_bool(0.5) {
        let l0 = 1;
        let l1 = rng.gen_range(-1..=0);
        terms.push(TermSpec {
            l0,
            l1,
            l2: 2,
            r: Poly(vec![0.5, 0.5]),
            a: FnSource::Sech {
                scale: c1 * rng.gen_range(0.05..0.2) * coupling_scale(q, l0, l1, 2, r_est),
                rate: rng.gen_range(2.5..3.5),
            },
        });
    }

    let mut forcing = vec![ForcingSpec {
        j: 1,
        f: FnSource::Gaussian { scale: rng.gen_range(0.5..2.0), width: rng.gen_range(0.7..1.5) },
    }];
    if rng.gen_bool(0.5) {
        forcing.push(ForcingSpec {
            j: 2,
            f: FnSource::ExpDecay { scale: rng.gen_range(0.1..1.0), rate: 3.0, power: 0.0 },
        });
    }

    ProblemFile {
        q,
        k: 1,
        eps_abs: None,
        eps_rel: None,
        beta: 2.0,
        mu: 2.0,
        grid: Some(GridSpec { m_max: 10.0, step: 0.05 }),
        q_poly: Poly(vec![c1, c2]),
        r_d: Poly(vec![1.0, b]),
        alpha_d,
        d_d: 1,
        direction: 0.0,
        mahler_terms: terms,
        forcing,
    }
}

/// Inverse of the largest factor `pre · q^{shift n + dec} R^{target - n}` a
/// term applies to `ω_n` for `n ≤ 16`, with `k = 1`.
fn coupling_scale(q: f64, l0: u32, l1: i32, l2: u32, r: f64) -> f64 {
    let (l0f, l1f, l2f) = (l0 as f64, l1 as f64, l2 as f64);
    let pre = q.powf(-l0f * (l0f - 1.0) / 2.0);
    let shift = l1f - l0f;
    let worst = (1..=16)
        .map(|n| {
            let n = n as f64;
            let target = l2f * (n + l0f);
            let dec = if l2 >= 2 {
                let m = n + l0f;
                (m * (m - 1.0) - l2f * m * (l2f * m - 1.0)) / 2.0
            } else {
                0.0
            };
            pre * q.powf(shift * n + dec) * r.powf(target - n)
        })
        .fold(0.0, f64::max);
    1.0 / worst
}
