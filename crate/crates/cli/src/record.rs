use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vinogradov::{Error, Result};

use crate::config::Settings;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub settings: Settings,
    pub threads: usize,
    pub version: String,
    pub wall_time_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub command: String,
    pub params: Value,
    pub result: Value,
    pub provenance: Provenance,
}

pub fn append(dir: &Path, record: &RunRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut f = OpenOptions::new().create(true).append(true).open(dir.join("runs.jsonl"))?;
    let line = serde_json::to_string(record).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(f, "{line}")?;
    Ok(())
}

pub fn read_all(path: &Path) -> Result<Vec<RunRecord>> {
    let f = fs::File::open(path)?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RunRecord =
            serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?;
        if rec.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "line {}: schema version {} (expected {SCHEMA_VERSION})",
                n + 1,
                rec.schema_version
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Timing fields never match across runs.
const VOLATILE: [&str; 1] = ["wall_time_secs"];

/// Structural equality, with floats compared to a relative `tol` and
/// integers exactly.
pub fn results_match(a: &Value, b: &Value, tol: f64) -> bool {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let keys = |m: &serde_json::Map<String, Value>| {
                m.keys()
                    .filter(|k| !VOLATILE.contains(&k.as_str()))
                    .cloned()
                    .collect::<Vec<_>>()
            };
            keys(x) == keys(y)
                && x
                    .iter()
                    .filter(|(k, _)| !VOLATILE.contains(&k.as_str()))
                    .all(|(k, v)| results_match(v, &y[k], tol))
        }
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(u, v)| results_match(u, v, tol))
        }
        (Value::Number(x), Value::Number(y)) => {
            if x.is_f64() || y.is_f64() {
                let (u, v) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
                u == v || (u - v).abs() <= tol * u.abs().max(v.abs()).max(1.0)
            } else {
                x == y
            }
        }
        _ => a == b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn matching_ignores_timing() {
        let a = json!({"count": 190, "points": [{"X": 5, "wall_time_secs": 0.1}]});
        let b = json!({"count": 190, "points": [{"X": 5, "wall_time_secs": 0.7}]});
        assert!(results_match(&a, &b, 0.0));
        let c = json!({"count": 191, "points": [{"X": 5, "wall_time_secs": 0.1}]});
        assert!(!results_match(&a, &c, 1e-9));
    }

    #[test]
    fn floats_within_tolerance() {
        assert!(results_match(&json!(1.0), &json!(1.0 + 1e-13), 1e-12));
        assert!(!results_match(&json!(1.0), &json!(1.1), 1e-12));
        assert!(!results_match(&json!(1), &json!(2), 1.0));
    }
}
