//! `qsum`: validate, solve, verify and sum q-difference–Mahler problems
//! given as JSON files.

mod exit;
mod manifest;
mod output;
mod solve;
mod sum;
mod transform;
mod validate;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exit::{CmdResult, Failure};
use output::Format;
use qsum::geometry::ProblemSpec;
use qsum::input::ProblemFile;

#[derive(Parser, Debug)]
#[command(name = "qsum", version, about = "q-Borel–Laplace summation of q-difference–Mahler problems")]
struct Cli {
    /// Worker threads for the parallel loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed of the randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Format of table outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the structural conditions and the sector geometry of a spec.
    Validate(validate::ValidateArgs),
    /// Run the Borel-plane fixed point and write the formal solution.
    Solve(solve::SolveArgs),
    /// Run one verification suite.
    Verify(verify::VerifyArgs),
    /// Evaluate the G_q-sum at a list of points.
    Sum(sum::SumArgs),
    /// Evaluate a single transform of a polynomial by quadrature.
    Transform(transform::TransformArgs),
}

/// Options shared by the commands that solve a problem first.
#[derive(Args, Debug, Clone)]
pub struct OrderArgs {
    /// Truncation order N.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub order: u32,
    /// Picard stopping tolerance, relative to 1 + ‖ω‖.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

pub struct Ctx {
    pub seed: u64,
    pub format: Format,
}

/// Root for relative spec paths and `file` function sources.
fn data_dir() -> Option<PathBuf> {
    std::env::var_os("QSUM_DATA_DIR").filter(|s| !s.is_empty()).map(PathBuf::from)
}

/// Reads and samples a problem file. A relative path that does not exist is
/// retried under `QSUM_DATA_DIR`.
pub fn load(path: &Path) -> Result<(ProblemFile, ProblemSpec), Failure> {
    let root = data_dir();
    let path = match &root {
        Some(r) if path.is_relative() && !path.exists() => r.join(path),
        _ => path.to_path_buf(),
    };
    let file = ProblemFile::read(&path)?;
    let base = root.or_else(|| path.parent().map(Path::to_path_buf));
    let spec = file.build(base.as_deref())?;
    Ok((file, spec))
}

fn run(cli: Cli) -> CmdResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot size the thread pool: {e}")))?;
    }
    let ctx = Ctx { seed: cli.seed, format: cli.format };
    match cli.command {
        Command::Validate(a) => validate::run(&ctx, &a),
        Command::Solve(a) => solve::run(&ctx, &a),
        Command::Verify(a) => verify::run(&ctx, &a),
        Command::Sum(a) => sum::run(&ctx, &a),
        Command::Transform(a) => transform::run(&ctx, &a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("qsum: {f}");
            ExitCode::from(f.code)
        }
    }
}
