use std::path::{Path, PathBuf};

use clap::Args;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::exit::{self, CmdResult, Failure};
use crate::manifest::RunManifest;
use crate::output::{f, s, Format, OutDir, Table};
use crate::solve::{prepare, settings, solve};
use crate::{Ctx, OrderArgs};
use qsum::qcore::CoveringPoint;
use qsum::solver::SolveMode;
use qsum::transforms::{gq_sum, ray_window, BorelEvaluator};
use qsum::QError;

#[derive(Args, Debug)]
pub struct SumArgs {
    /// Problem file.
    pub spec: PathBuf,
    /// CSV with columns t_r,t_theta,z_re,z_im (header required, `#` lines skipped).
    #[arg(long)]
    pub points: PathBuf,
    #[command(flatten)]
    pub order: OrderArgs,
    /// Output directory; without it the table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force_triangular: bool,
    /// Strip half-width for the inverse Fourier transform (default beta/2).
    #[arg(long)]
    pub beta_prime: Option<f64>,
}

pub type Point = (f64, f64, Complex64);

/// Reads `t_r,t_theta,z_re,z_im` rows.
pub fn read_points(path: &Path) -> Result<Vec<Point>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read points file {}: {e}", path.display())))?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').map(str::trim).collect();
    if header != ["t_r", "t_theta", "z_re", "z_im"] {
        return Err(Failure::usage("points file must start with the header t_r,t_theta,z_re,z_im"));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::usage(format!("points file row {}: {e}", i + 1)))?;
            match v[..] {
                [r, th, re, im] => Ok((r, th, Complex64::new(re, im))),
                _ => Err(Failure::usage(format!("points file row {}: expected 4 columns", i + 1))),
            }
        })
        .collect()
}

fn status_of(e: &QError) -> &'static str {
    match e {
        QError::DomainTooLarge { .. } | QError::DomainViolation { .. } => "domain_too_large",
        QError::StripViolation { .. } => "strip_violation",
        QError::InvalidPoint { .. } => "invalid_point",
        _ => "numeric_failure",
    }
}

pub fn run(ctx: &Ctx, args: &SumArgs) -> CmdResult {
    let (file, spec) = crate::load(&args.spec)?;
    let points = read_points(&args.points)?;
    let cfg = prepare(&spec, file.direction)?;
    let st = settings(&args.order, SolveMode::Contraction)?;
    let (sol, st) = solve(&spec, &cfg, st, args.force_triangular).map_err(|(e, _)| Failure::from(e))?;
    let ev = BorelEvaluator::for_config(&spec, sol.omega, &cfg)?;
    let beta_prime = args.beta_prime.unwrap_or(spec.beta / 2.0);
    let params = &spec.params;

    let mut table = Table::new(&["t_r", "t_theta", "z_re", "z_im", "re", "im", "error_estimate", "status", "detail"]);
    let mut flagged = 0;
    for &(r, theta, z) in &points {
        let head = vec![f(r), f(theta), f(z.re), f(z.im)];
        let result = if r == 0.0 {
            // no constant term
            Ok(qsum::transforms::Estimate::exact(Complex64::new(0.0, 0.0)))
        } else {
            CoveringPoint::new(r, theta).and_then(|t| {
                let mut quad = ray_window(t, cfg.d, 1.0, st.order as f64, params);
                quad.certified_radius = cfg.r;
                gq_sum(&ev, t, z, beta_prime, &quad, params)
            })
        };
        let tail = match result {
            Ok(e) => vec![f(e.value.re), f(e.value.im), f(e.error), s("ok"), Value::Null],
            Err(e) => {
                flagged += 1;
                vec![Value::Null, Value::Null, Value::Null, s(status_of(&e)), s(e.to_string())]
            }
        };
        table.push(head.into_iter().chain(tail).collect());
    }

    let summary = format!("{} points, {flagged} flagged", points.len());
    match &args.out {
        Some(dir) => {
            let mut out = OutDir::create(dir)?;
            out.table("sum", &table, ctx.format)?;
            let mut m = RunManifest::new("sum", Some(&file));
            m.config = Some(cfg);
            m.settings = json!({ "solver": st, "beta_prime": beta_prime, "base_radius": ev.base_radius() });
            m.quadrature = json!({
                "rule": "trapezoid in s = log|u| with node doubling",
                "window": "Gaussian tail below exp(-50) around the kernel peak",
                "ray_direction": cfg.d,
                "certified_radius": cfg.r,
            });
            out.finish(m.outcome(exit::OK, summary.clone()))?;
            eprintln!("{summary}");
        }
        None => match ctx.format {
            Format::Csv => print!("{}", table.to_csv(None)),
            Format::Json => println!("{}", serde_json::to_string_pretty(&table.to_json()).expect("json")),
        },
    }
    Ok(exit::OK)
}
