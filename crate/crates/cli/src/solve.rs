use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::exit::{self, CmdResult, Failure};
use crate::manifest::RunManifest;
use crate::output::{f, Format, OutDir, Table};
use crate::{Ctx, OrderArgs};
use qsum::fourier::series_norm_1r;
use qsum::geometry::{select_sector, ProblemSpec, SectorConfig};
use qsum::solver::{
    assemble_u_hat, assemble_u_hat_series, main_equation_residual, solve_fixed_point, BorelSolution, SolveMode,
    SolverSettings,
};
use qsum::QError;

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Problem file.
    pub spec: PathBuf,
    #[command(flatten)]
    pub order: OrderArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Keep iterating when the contraction is lost (the truncated operator is triangular).
    #[arg(long)]
    pub force_triangular: bool,
    /// Strip half-width for the u_hat table (default beta/2).
    #[arg(long)]
    pub beta_prime: Option<f64>,
}

/// Structural validation and sector selection; both failures mean a bad spec.
pub fn prepare(spec: &ProblemSpec, direction: f64) -> Result<SectorConfig, Failure> {
    spec.validate()?;
    Ok(select_sector(spec, direction)?)
}

pub fn settings(order: &OrderArgs, mode: SolveMode) -> Result<SolverSettings, Failure> {
    if !(order.tol > 0.0 && order.tol.is_finite()) {
        return Err(Failure::usage("--tol must be positive"));
    }
    let n = order.order as usize;
    let max_iter = if mode == SolveMode::Triangular { n + 2 } else { n + 8 };
    Ok(SolverSettings { order: n, tol: order.tol, max_iter, mode })
}

/// Contraction mode first; the triangular fallback only when asked for.
pub fn solve(
    spec: &ProblemSpec,
    cfg: &SectorConfig,
    st: SolverSettings,
    force_triangular: bool,
) -> Result<(BorelSolution, SolverSettings), (QError, Vec<f64>)> {
    match solve_fixed_point(spec, cfg, &st) {
        Ok(sol) => Ok((sol, st)),
        Err(QError::NoContraction { ratios }) if force_triangular => {
            let st = SolverSettings { mode: SolveMode::Triangular, max_iter: st.order + 2, ..st };
            solve_fixed_point(spec, cfg, &st).map(|sol| (sol, st)).map_err(|e| (e, ratios))
        }
        Err(QError::NoContraction { ratios }) => Err((QError::NoContraction { ratios: ratios.clone() }, ratios)),
        Err(e) => Err((e, Vec::new())),
    }
}

/// Real-axis sample points of the `u_p(z)` table.
pub fn table_points() -> Vec<Complex64> {
    (-4..=4).map(|i| Complex64::new(0.25 * i as f64, 0.0)).collect()
}

#[derive(Serialize)]
struct Report {
    iterations: usize,
    contraction_history: Vec<f64>,
    #[serde(rename = "residual_1R")]
    residual_1r: f64,
    per_order_residuals: Vec<f64>,
    per_order_scale: Vec<f64>,
    checked_orders: usize,
    #[serde(rename = "norm_1R")]
    norm_1r: f64,
    tol: f64,
    converged: bool,
    mode: SolveMode,
    contraction_lost: bool,
    dropped_mass: f64,
}

pub fn run(_ctx: &Ctx, args: &SolveArgs) -> CmdResult {
    let (file, spec) = crate::load(&args.spec)?;
    let cfg = prepare(&spec, file.direction)?;
    let mut out = OutDir::create(&args.out)?;
    let mut manifest = RunManifest::new("solve", Some(&file));
    manifest.config = Some(cfg);
    let beta_prime = args.beta_prime.unwrap_or(spec.beta / 2.0);
    let st = settings(&args.order, SolveMode::Contraction)?;

    let (sol, st) = match solve(&spec, &cfg, st, args.force_triangular) {
        Ok(x) => x,
        Err((e, ratios)) => {
            let code = exit::code_for(&e);
            out.json("report.json", &json!({ "error": e.to_string(), "contraction_history": ratios }))?;
            out.finish(manifest.outcome(code, e.to_string()))?;
            return Err(Failure::new(code, e.to_string()));
        }
    };
    manifest.settings = json!({ "solver": st, "beta_prime": beta_prime });

    let u = assemble_u_hat_series(&sol, &spec.params);
    let res = main_equation_residual(&u, &spec)?;
    let norm = series_norm_1r(&sol.omega, cfg.r);
    let zs = table_points();
    let values = assemble_u_hat(&u, &zs, beta_prime)?;

    out.json("omega.json", &sol.omega)?;
    out.json("U_hat.json", &u)?;
    let mut table = Table::new(&["p", "z_re", "z_im", "re", "im"]);
    for (p, row) in values.iter().enumerate() {
        for (z, v) in zs.iter().zip(row) {
            table.push(vec![json!(p + 1), f(z.re), f(z.im), f(v.re), f(v.im)]);
        }
    }
    out.table("u_hat", &table, Format::Csv)?;
    let converged = sol.residual_1r <= st.tol * (1.0 + norm);
    let report = Report {
        iterations: sol.iterations,
        contraction_history: sol.contraction_history.clone(),
        residual_1r: sol.residual_1r,
        per_order_residuals: res.per_order.clone(),
        per_order_scale: res.scale.clone(),
        checked_orders: res.checked_orders,
        norm_1r: norm,
        tol: st.tol,
        converged,
        mode: sol.mode,
        contraction_lost: sol.contraction_lost,
        dropped_mass: sol.dropped_mass,
    };
    out.json("report.json", &report)?;

    let summary = format!(
        "{} iterations, residual_1R {:e}, max checked order residual {:e}",
        sol.iterations,
        sol.residual_1r,
        res.max_checked()
    );
    println!("{summary}");
    out.finish(manifest.outcome(exit::OK, summary))?;
    Ok(exit::OK)
}
