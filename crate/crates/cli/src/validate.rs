use std::path::PathBuf;

use clap::Args;
use serde_json::Value;

use crate::exit::{self, CmdResult};
use crate::manifest::RunManifest;
use crate::output::{s, Format, OutDir, Table};
use crate::Ctx;
use qsum::geometry::{
    pm_lower_bound_report, select_sector, ConditionCheck, ProblemSpec, SampleDensity, SectorConfig, CONDITIONS,
};
use qsum::QError;

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Problem file.
    pub spec: PathBuf,
    /// Also write the report and a manifest to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn failed(condition: &str, witness: String) -> ConditionCheck {
    ConditionCheck { condition: condition.into(), passed: false, witness: Some(witness) }
}

/// Structural checks, then sector selection and the ratio gap when the
/// structure allows them.
pub fn checks(spec: &ProblemSpec, direction: f64) -> (Vec<ConditionCheck>, Option<SectorConfig>) {
    let mut out = spec.structural_checks();
    if out.iter().any(|c| !c.passed) {
        out.push(ConditionCheck {
            condition: CONDITIONS[5].into(),
            passed: false,
            witness: Some("not checked: structural conditions failed".into()),
        });
        return (out, None);
    }
    let cfg = match select_sector(spec, direction) {
        Ok(cfg) => cfg,
        Err(e) => {
            out.push(failed("sector", e.to_string()));
            return (out, None);
        }
    };
    out.push(ConditionCheck { condition: "sector".into(), passed: true, witness: None });
    match pm_lower_bound_report(spec, &cfg, SampleDensity::default()) {
        Ok(_) => out.push(ConditionCheck { condition: CONDITIONS[5].into(), passed: true, witness: None }),
        Err(e @ QError::BoundViolation { .. }) => out.push(failed(CONDITIONS[5], e.to_string())),
        Err(e) => out.push(failed(CONDITIONS[5], format!("could not evaluate: {e}"))),
    }
    (out, Some(cfg))
}

pub fn run(ctx: &Ctx, args: &ValidateArgs) -> CmdResult {
    let (file, spec) = crate::load(&args.spec)?;
    let (results, cfg) = checks(&spec, file.direction);

    let mut table = Table::new(&["condition", "passed", "witness"]);
    for c in &results {
        table.push(vec![
            s(&c.condition),
            Value::Bool(c.passed),
            c.witness.clone().map(Value::String).unwrap_or_default(),
        ]);
    }
    let bad: Vec<&ConditionCheck> = results.iter().filter(|c| !c.passed).collect();
    let code = if bad.is_empty() { exit::OK } else { exit::INVALID_SPEC };

    match ctx.format {
        Format::Csv => {
            for c in &results {
                match &c.witness {
                    Some(w) if !c.passed => println!("FAIL {}: {w}", c.condition),
                    _ => println!("PASS {}", c.condition),
                }
            }
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(&table.to_json()).expect("json")),
    }

    if let Some(dir) = &args.out {
        let mut out = OutDir::create(dir)?;
        out.table("validation", &table, ctx.format)?;
        let mut m = RunManifest::new("validate", Some(&file));
        m.config = cfg;
        let summary = match bad.first() {
            Some(c) => format!("{} of {} conditions failed, first {}", bad.len(), results.len(), c.condition),
            None => format!("all {} conditions pass", results.len()),
        };
        out.finish(m.outcome(code, summary))?;
    }
    Ok(code)
}
