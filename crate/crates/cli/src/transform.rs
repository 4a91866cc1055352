use std::path::PathBuf;

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use crate::exit::{self, CmdResult, Failure};
use crate::manifest::RunManifest;
use crate::output::{f, s, Format, OutDir, Table};
use crate::Ctx;
use qsum::qcore::{CoveringPoint, QParams};
use qsum::series::{formal_deceleration, formal_q_borel, formal_q_laplace, TruncatedSeries};
use qsum::transforms::{
    deceleration_integral, deceleration_orders, q_borel_analytic, q_laplace, ray_window, CircleContour,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// q-Laplace transform of order k along the ray through the point.
    Laplace,
    /// Analytic q-Borel transform of order k.
    Borel,
    /// q-deceleration operator D_p.
    Decelerate,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    pub kind: Kind,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Real coefficients c_1,...,c_N of f(x) = c_1 x + ... + c_N x^N.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub coeffs: Vec<f64>,
    /// Evaluation point as r,theta on the covering of C*.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub at: Vec<f64>,
    /// Mahler power of the deceleration.
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: &TransformArgs) -> CmdResult {
    let params = QParams::new(args.q, args.k).map_err(|e| Failure::usage(e.to_string()))?;
    if args.at.len() != 2 {
        return Err(Failure::usage("--at takes r,theta"));
    }
    let at = CoveringPoint::new(args.at[0], args.at[1]).map_err(|e| Failure::usage(e.to_string()))?;
    let series = TruncatedSeries::from_reals(&args.coeffs);
    let degrees: Vec<usize> = (1..=args.coeffs.len()).filter(|&n| args.coeffs[n - 1] != 0.0).collect();
    let (lo, hi) = (*degrees.first().unwrap_or(&1) as f64, *degrees.last().unwrap_or(&1) as f64);
    let poly = |x: Complex64| Ok(series.eval(x));

    let (est, formal) = match args.kind {
        Kind::Laplace => {
            let quad = ray_window(at, at.theta(), lo, hi, &params);
            (q_laplace(|u| poly(u.to_complex()), at, &quad, &params)?, formal_q_laplace(&series, &params))
        }
        Kind::Borel => {
            let contour = CircleContour::saddle(at, (lo + hi) / 2.0, args.k as f64, &params);
            (q_borel_analytic(|x| poly(x.to_complex()), at, &contour, &params)?, formal_q_borel(&series, &params))
        }
        Kind::Decelerate => {
            let (k1, _) = deceleration_orders(args.p, args.k);
            let contour = CircleContour::saddle(at, (lo + hi) / 2.0, k1, &params);
            let est = deceleration_integral(poly, args.p, at, &contour, f64::INFINITY, &params)?;
            (est, formal_deceleration(&series, args.p, &params)?)
        }
    };
    let want = formal.eval(at.to_complex());

    let mut table = Table::new(&[
        "kind",
        "q",
        "k",
        "r",
        "theta",
        "re",
        "im",
        "error_estimate",
        "formal_re",
        "formal_im",
        "abs_diff",
    ]);
    let kind = format!("{:?}", args.kind).to_lowercase();
    table.push(vec![
        s(&kind),
        f(args.q),
        json!(args.k),
        f(at.r()),
        f(at.theta()),
        f(est.value.re),
        f(est.value.im),
        f(est.error),
        f(want.re),
        f(want.im),
        f((est.value - want).norm()),
    ]);

    match &args.out {
        Some(dir) => {
            let mut out = OutDir::create(dir)?;
            out.table("transform", &table, ctx.format)?;
            let mut m = RunManifest::new("transform", None);
            m.settings = json!({ "kind": kind, "q": args.q, "k": args.k, "coeffs": args.coeffs, "p": args.p });
            m.quadrature = json!({ "intervals": est.intervals });
            out.finish(m.outcome(exit::OK, format!("abs diff from the formal value {:e}", (est.value - want).norm())))?;
        }
        None => match ctx.format {
            Format::Csv => print!("{}", table.to_csv(None)),
            Format::Json => println!("{}", serde_json::to_string_pretty(&table.to_json()).expect("json")),
        },
    }
    Ok(exit::OK)
}
