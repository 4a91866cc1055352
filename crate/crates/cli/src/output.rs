//! Artifact emission: shortest round-trip numbers, CSV/JSON tables and
//! output directories whose files all point at one manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::manifest::RunManifest;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        // ryu through serde_json; integral values keep their ".0"
        serde_json::to_string(&x).expect("finite float")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A rectangular table. Cells are kept as JSON values so the CSV and JSON
/// renderings agree exactly.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, manifest: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(m) = manifest {
            out.push_str(&format!("# manifest={m}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
            .collect();
        Value::Array(rows)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

/// A float cell; non-finite values become strings since JSON has no spelling for them.
pub fn f(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(num(x)))
}

pub fn s(x: impl Into<String>) -> Value {
    Value::String(x.into())
}

pub fn to_json_text<T: Serialize + ?Sized>(v: &T) -> String {
    let mut text = serde_json::to_string_pretty(v).expect("serializable output");
    text.push('\n');
    text
}

/// Directory of outputs for one run.
pub struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    /// Writes `value` with a top-level `"manifest"` key added. Readers of the
    /// library types ignore the extra key.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut v = serde_json::to_value(value).map_err(io::Error::other)?;
        match &mut v {
            Value::Object(map) => {
                map.insert("manifest".into(), Value::String(MANIFEST_FILE.into()));
            }
            other => {
                let data = std::mem::take(other);
                *other = serde_json::json!({ "manifest": MANIFEST_FILE, "rows": data });
            }
        }
        self.write(name, &to_json_text(&v))
    }

    pub fn table(&mut self, stem: &str, table: &Table, format: Format) -> io::Result<String> {
        match format {
            Format::Csv => {
                let name = format!("{stem}.csv");
                self.write(&name, &table.to_csv(Some(MANIFEST_FILE)))?;
                Ok(name)
            }
            Format::Json => {
                let name = format!("{stem}.json");
                self.json(&name, &table.to_json())?;
                Ok(name)
            }
        }
    }

    fn write(&mut self, name: &str, text: &str) -> io::Result<()> {
        fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(self, mut manifest: RunManifest) -> io::Result<()> {
        manifest.outputs = self.files;
        fs::write(self.dir.join(MANIFEST_FILE), to_json_text(&manifest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0, 1e-300, -2.5e17, std::f64::consts::PI, 5e-324] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new(&["a", "b", "note"]);
        t.push(vec![f(0.1), serde_json::json!(3), s("x,y")]);
        assert_eq!(t.to_csv(None), "a,b,note\n0.1,3,\"x,y\"\n");
        assert_eq!(t.to_json()[0]["a"], serde_json::json!(0.1));
    }
}
