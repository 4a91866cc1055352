use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::exit::{self, CmdResult, Failure};
use crate::manifest::RunManifest;
use crate::output::{f, s, Format, OutDir, Table};
use crate::solve::{prepare, settings, solve};
use crate::sum::read_points;
use crate::{Ctx, OrderArgs};
use qsum::geometry::{
    inv_pm_taylor, measure_delta1, pm_lower_bound_report, pm_taylor, ProblemSpec, SampleDensity, SectorConfig,
    DELTA1_SLACK,
};
use qsum::input::ProblemFile;
use qsum::qcore::{exp_q_zero, locate_zero, CoveringPoint, QParams};
use qsum::series::{borel_commutation_check, borel_exponent, mahler_deceleration_check, TruncatedSeries};
use qsum::solver::{assemble_u_hat_series, SolveMode};
use qsum::transforms::{
    gevrey_errors, gevrey_fit, gevrey_radius, q_borel_analytic, q_laplace, ray_window, theorem2_residual,
    BorelEvaluator, CircleContour, RayQuadrature, ResidualSettings, Theorem2Row,
};
use qsum::QError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Formal commutation and Mahler/deceleration identities, monomial transforms.
    Identities,
    /// Sector selection, lower bounds of P_m and the inverse Taylor expansion.
    Geometry,
    /// Residual of the transformed equation at sample points.
    Theorem2,
    /// q-Gevrey rate of the partial sums.
    Asymptotics,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Problem file (optional for the identities suite).
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[command(flatten)]
    pub order: OrderArgs,
    /// Output directory; without it the table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sample points for the theorem2 suite (t_r,t_theta,z_re,z_im).
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long)]
    pub force_triangular: bool,
}

struct SuiteRun {
    table: Table,
    config: Option<SectorConfig>,
    settings: Value,
    quadrature: Value,
}

impl SuiteRun {
    fn new(table: Table) -> Self {
        SuiteRun { table, config: None, settings: Value::Null, quadrature: Value::Null }
    }

    fn failures(&self) -> usize {
        let col = self.table.columns.iter().position(|c| c == "passed").expect("suites report a passed column");
        self.table.rows.iter().filter(|r| r[col] != Value::Bool(true)).count()
    }
}

fn pt(r: f64, theta: f64) -> CoveringPoint {
    CoveringPoint::new(r, theta).expect("valid point")
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn identities(seed: u64, params: &[QParams]) -> Result<SuiteRun, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Table::new(&["check", "q", "k", "a", "b", "exponents_exact", "error", "tolerance", "passed"]);
    let mut row = |check: &str, p: &QParams, a: u32, b: u32, exact: bool, err: f64, tol: f64| {
        let pass = exact && err <= tol;
        t.push(vec![
            s(check),
            f(p.q()),
            json!(p.k()),
            json!(a),
            json!(b),
            Value::Bool(exact),
            f(err),
            f(tol),
            Value::Bool(pass),
        ]);
    };
    for p in params {
        let u = TruncatedSeries::from_scalars(
            (0..20).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        );
        for sigma in 0..=3u32 {
            for j in 0..=3u32 {
                let chk = borel_commutation_check(&u, sigma as usize, j, p);
                row("borel_commutation", p, sigma, j, chk.exponents_exact, chk.max_rel_error, 1e-13);
            }
        }
        for pw in 2..=4u32 {
            let chk = mahler_deceleration_check(&u, pw, p)?;
            row("mahler_deceleration", p, pw, 0, chk.exponents_exact, chk.max_rel_error, 1e-13);
        }
        let t0 = pt(0.25, 0.0);
        let xi = pt(0.5, 0.2);
        for n in 1..=6u32 {
            let mut quad = RayQuadrature::around(t0, 0.0, n as f64, p);
            quad.certified_radius = 1.0;
            let got = q_laplace(|u| Ok(u.to_complex().powu(n)), t0, &quad, p)?.value;
            let want = p.qpow(borel_exponent(n as usize, p.k())) * t0.to_complex().powu(n);
            row("laplace_monomial", p, n, 0, true, rel(got, want), 1e-7);

            let contour = CircleContour::saddle(xi, n as f64, p.k() as f64, p);
            let got = q_borel_analytic(|x| Ok(x.to_complex().powu(n)), xi, &contour, p)?.value;
            let want = xi.to_complex().powu(n) / p.qpow(borel_exponent(n as usize, p.k()));
            row("borel_monomial", p, n, 0, true, rel(got, want), 1e-6);
        }
    }
    let mut run = SuiteRun::new(t);
    run.settings = json!({ "coefficients": 20, "seed": seed });
    Ok(run)
}

fn geometry(spec: &ProblemSpec, file: &ProblemFile) -> Result<SuiteRun, Failure> {
    let cfg = prepare(spec, file.direction)?;
    let mut t = Table::new(&["check", "value", "bound", "tau_re", "tau_im", "m", "passed", "detail"]);
    let none = Value::Null;

    let density = SampleDensity { rays: 80, radii: 80 };
    match pm_lower_bound_report(spec, &cfg, density) {
        Ok(r) => {
            t.push(vec![
                s("ratio_gap"),
                f(r.r2),
                f(r.ratio_ceiling),
                none.clone(),
                none.clone(),
                none.clone(),
                Value::Bool(true),
                s(format!("r1 = {}, binding {:?}", r.r1, r.binding)),
            ]);
            t.push(vec![
                s("uniform_lower_bound"),
                f(r.min_ratio),
                f(cfg.delta1 * (1.0 - DELTA1_SLACK)),
                none.clone(),
                none.clone(),
                none.clone(),
                Value::Bool(true),
                s("min |P_m| / |R_D(im)| on the sector and disc"),
            ]);
            t.push(vec![
                s("far_field_constant"),
                f(r.far_constant),
                f(0.0),
                none.clone(),
                none.clone(),
                none.clone(),
                Value::Bool(r.far_constant > 0.0),
                s("out to 100 rho"),
            ]);
        }
        Err(QError::BoundViolation { tau_re, tau_im, m, ratio, bound }) => {
            t.push(vec![
                s("lower_bound"),
                f(ratio),
                f(bound),
                f(tau_re),
                f(tau_im),
                f(m),
                Value::Bool(false),
                s("BoundViolation"),
            ]);
        }
        Err(e) => return Err(e.into()),
    }

    let (refined, tau, m) = measure_delta1(spec, cfg.d, cfg.half_opening, cfg.rho, SampleDensity::default().doubled())?;
    let drift = (refined - cfg.delta1).abs() / cfg.delta1;
    t.push(vec![
        s("delta1_refinement"),
        f(drift),
        f(0.01),
        f(tau.re),
        f(tau.im),
        f(m),
        Value::Bool(drift < 0.01),
        s(format!("delta1 = {}, refined {}", cfg.delta1, refined)),
    ]);

    let r1 = spec.rho_max() / 2.0;
    let n = 12;
    for m in [-spec.grid.m_max() / 2.0, 0.0, spec.grid.m_max() / 2.0] {
        let p = pm_taylor(m, spec, n)?;
        let inv = inv_pm_taylor(m, spec, n)?;
        let worst = (0..=n)
            .map(|i| {
                let prod: Complex64 = (0..=i).map(|j| p[j] * inv[i - j]).sum();
                let want = if i == 0 { 1.0 } else { 0.0 };
                (prod - want).norm() * r1.powi(i as i32)
            })
            .fold(0.0, f64::max);
        t.push(vec![
            s("inverse_taylor"),
            f(worst),
            f(1e-9),
            none.clone(),
            none.clone(),
            f(m),
            Value::Bool(worst <= 1e-9),
            s("P_m * (1/P_m) = 1 to order 12, scaled by R1^p"),
        ]);
    }

    for k in 0..=1u32 {
        let exact = exp_q_zero(k, &spec.params);
        let found = locate_zero(Complex64::new(exact * 1.03, 0.01), &spec.params)?;
        let err = (found - exact).norm() / exact.abs();
        t.push(vec![
            s("exp_q_zero"),
            f(err),
            f(1e-10),
            f(found.re),
            f(found.im),
            none.clone(),
            Value::Bool(err <= 1e-10),
            s(format!("zero index {k}")),
        ]);
    }

    let mut run = SuiteRun::new(t);
    run.config = Some(cfg);
    run.settings = json!({ "density": density, "refined_density": SampleDensity::default().doubled() });
    Ok(run)
}

/// Five points inside the certified disc, away from the real z axis.
fn default_points(cfg: &SectorConfig) -> Vec<(f64, f64, Complex64)> {
    (0..5)
        .map(|i| (cfg.r / 8.0 * (0.6 + 0.1 * i as f64), 0.05 * i as f64, Complex64::new(0.1 * i as f64, 0.05)))
        .collect()
}

fn theorem2(spec: &ProblemSpec, file: &ProblemFile, args: &VerifyArgs) -> Result<SuiteRun, Failure> {
    let cfg = prepare(spec, file.direction)?;
    let st = settings(&args.order, SolveMode::Contraction)?;
    let (sol, st) = solve(spec, &cfg, st, args.force_triangular).map_err(|(e, _)| Failure::from(e))?;
    let ev = BorelEvaluator::for_config(spec, sol.omega, &cfg)?;
    let points = match &args.points {
        Some(p) => read_points(p)?,
        None => default_points(&cfg),
    };
    let rs = ResidualSettings::new(spec.beta / 2.0);
    // budget multiple: quadrature alone without Mahler terms, plus the continuation otherwise
    let factor = if spec.terms.is_empty() { 10.0 } else { 100.0 };

    let n_terms = spec.terms.len();
    let header = Theorem2Row::csv_header(n_terms);
    let mut cols: Vec<&str> = header.split(',').collect();
    cols.extend(["ratio", "passed", "detail"]);
    let mut t = Table::new(&cols);
    for &(r, theta, z) in &points {
        let result = CoveringPoint::new(r, theta).and_then(|tp| theorem2_residual(&ev, &cfg, &[(tp, z)], &rs));
        match result {
            Ok(rows) => {
                let row = &rows[0];
                let mut cells = vec![f(r), f(theta), f(z.re), f(z.im)];
                for c in [row.lhs, row.rd_term, row.forcing_term].iter().chain(&row.terms) {
                    cells.push(f(c.re));
                    cells.push(f(c.im));
                }
                let ratio = row.residual / row.budget;
                cells.extend([f(row.residual), f(row.budget), f(ratio), Value::Bool(ratio <= factor), Value::Null]);
                t.push(cells);
            }
            Err(e) => {
                let mut cells = vec![f(r), f(theta), f(z.re), f(z.im)];
                cells.extend(std::iter::repeat(Value::Null).take(cols.len() - 6));
                cells.extend([Value::Bool(false), s(e.to_string())]);
                t.push(cells);
            }
        }
    }
    let mut run = SuiteRun::new(t);
    run.config = Some(cfg);
    run.settings = json!({ "solver": st, "residual": rs, "budget_factor": factor, "base_radius": ev.base_radius() });
    run.quadrature = json!({
        "rule": "trapezoid in s = log|u| with node doubling",
        "budget": "sum of |I_n - I_{n/2}| plus eps_rel times the term magnitudes",
    });
    Ok(run)
}

fn asymptotics(spec: &ProblemSpec, file: &ProblemFile, args: &VerifyArgs) -> Result<SuiteRun, Failure> {
    let cfg = prepare(spec, file.direction)?;
    let st = settings(&args.order, SolveMode::Contraction)?;
    let (sol, st) = solve(spec, &cfg, st, args.force_triangular).map_err(|(e, _)| Failure::from(e))?;
    let u = assemble_u_hat_series(&sol, &spec.params);
    let ev = BorelEvaluator::for_config(spec, sol.omega, &cfg)?;
    let n_max = 8.min(st.order);
    let radius = gevrey_radius(&u, n_max);
    let ns: Vec<usize> = (2..=n_max).collect();
    let target = spec.params.ln_q() / (2.0 * spec.params.k() as f64);

    let mut t = Table::new(&["t_r", "N", "error", "c2", "target", "rel_error", "passed"]);
    for div in [4.0, 8.0] {
        let tp = CoveringPoint::new((radius / div).min(cfg.r / 2.0), 0.0)?;
        let mut quad = ray_window(tp, cfg.d, 1.0, st.order as f64, &spec.params);
        quad.max_doublings = 0;
        quad.nodes *= 2;
        let errs = gevrey_errors(
            &ev,
            &u,
            tp,
            Complex64::new(0.0, 0.0),
            1.0_f64.min(spec.beta / 2.0),
            &quad,
            &ns,
            &spec.params,
        )?;
        let fit = gevrey_fit(&errs, tp.r(), &spec.params);
        for (n, e) in errs {
            t.push(vec![
                f(tp.r()),
                json!(n),
                f(e),
                f(fit.c2),
                f(target),
                f(fit.rel_error),
                Value::Bool(fit.rel_error <= 0.15),
            ]);
        }
    }
    let mut run = SuiteRun::new(t);
    run.config = Some(cfg);
    run.settings = json!({ "solver": st, "gevrey_radius": radius, "orders": ns, "tolerance": 0.15 });
    run.quadrature = json!({ "rule": "fixed trapezoid, twice the default ray nodes" });
    Ok(run)
}

pub fn run(ctx: &Ctx, args: &VerifyArgs) -> CmdResult {
    let loaded = args.spec.as_deref().map(crate::load).transpose()?;
    let need =
        |name: &str| loaded.as_ref().ok_or_else(|| Failure::usage(format!("the {name} suite needs a problem file")));
    let (name, run) = match args.suite {
        Suite::Identities => {
            let params = match &loaded {
                Some((_, spec)) => vec![spec.params],
                None => [(2.0, 1), (2.0, 2), (1.5, 1), (1.5, 2)]
                    .iter()
                    .map(|&(q, k)| QParams::new(q, k))
                    .collect::<Result<_, _>>()?,
            };
            ("identities", identities(ctx.seed, &params)?)
        }
        Suite::Geometry => {
            let (file, spec) = need("geometry")?;
            ("geometry", geometry(spec, file)?)
        }
        Suite::Theorem2 => {
            let (file, spec) = need("theorem2")?;
            ("theorem2", theorem2(spec, file, args)?)
        }
        Suite::Asymptotics => {
            let (file, spec) = need("asymptotics")?;
            ("asymptotics", asymptotics(spec, file, args)?)
        }
    };

    let failures = run.failures();
    let code = if failures == 0 { exit::OK } else { exit::VERIFY_FAIL };
    let summary = format!("suite {name}: {} checks, {failures} failed", run.table.rows.len());
    match &args.out {
        Some(dir) => {
            let mut out = OutDir::create(dir)?;
            out.table(name, &run.table, ctx.format)?;
            let mut m = RunManifest::new(&format!("verify --suite {name}"), loaded.as_ref().map(|(f, _)| f));
            m.config = run.config;
            m.settings = run.settings;
            m.quadrature = run.quadrature;
            out.finish(m.outcome(code, summary.clone()))?;
        }
        None => match ctx.format {
            Format::Csv => print!("{}", run.table.to_csv(None)),
            Format::Json => println!("{}", serde_json::to_string_pretty(&run.table.to_json()).expect("json")),
        },
    }
    eprintln!("{summary}");
    Ok(code)
}
