use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use qsum::geometry::SectorConfig;
use qsum::input::ProblemFile;

/// Stated in every manifest so readers know which sign convention produced the numbers.
pub const CONTOUR_ORIENTATION: &str =
    "circle contours x = r e^{it} are traversed with t increasing; the Borel prefactor is real and positive";

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub status: String,
    pub exit_code: u8,
    pub summary: String,
}

/// Everything needed to reproduce a run. Nothing here depends on the wall
/// clock, the thread count or the working directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// `sha256("blob <len>\0" + canonical spec JSON)`.
    pub spec_hash: Option<String>,
    pub spec: Option<ProblemFile>,
    pub config: Option<SectorConfig>,
    pub settings: Value,
    pub quadrature: Value,
    pub contour_orientation: &'static str,
    /// `SOURCE_DATE_EPOCH`, when set.
    pub timestamp: Option<u64>,
    pub outcome: Outcome,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, spec: Option<&ProblemFile>) -> Self {
        RunManifest {
            tool: "qsum",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            spec_hash: spec.map(spec_hash),
            spec: spec.cloned(),
            config: None,
            settings: Value::Null,
            quadrature: Value::Null,
            contour_orientation: CONTOUR_ORIENTATION,
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()),
            outcome: Outcome { status: "ok".into(), exit_code: 0, summary: String::new() },
            outputs: Vec::new(),
        }
    }

    pub fn outcome(mut self, exit_code: u8, summary: String) -> Self {
        let status = if exit_code == 0 { "ok" } else { "fail" };
        self.outcome = Outcome { status: status.into(), exit_code, summary };
        self
    }
}

/// Git-style content hash of the parsed spec, so formatting changes in the
/// input file do not change it.
pub fn spec_hash(spec: &ProblemFile) -> String {
    let body = serde_json::to_vec(spec).expect("spec serializes");
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(&body);
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_layout() {
        let a = ProblemFile::from_json(
            r#"{"q":2.0,"k":1,"beta":2.0,"mu":2.0,"Q":[1.0],"R_D":[1.0],"alpha_d":1.0,"d_d":1}"#,
        )
        .unwrap();
        let b = ProblemFile::from_json(
            "{\n  \"k\": 1, \"q\": 2,\n \"beta\": 2, \"mu\": 2, \"Q\": [1], \"R_D\": [1], \"alpha_d\": 1, \"d_d\": 1\n}",
        )
        .unwrap();
        assert_eq!(spec_hash(&a), spec_hash(&b));
        assert_eq!(spec_hash(&a).len(), 64);
    }
}
