mod args;
mod commands;
mod config;
mod record;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};
use vinogradov::{Error, Result};

use args::{Cli, Command, Format};
use commands::{command_name, Context, Outcome};
use config::{Resolved, Settings};
use record::{Provenance, RunRecord, SCHEMA_VERSION};

const EXIT_BUDGET: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_TOLERANCE: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Tolerance(_) => EXIT_TOLERANCE,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    match drive(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn drive(cli: &Cli) -> Result<()> {
    let resolved = config::resolve(cli)?;
    if let Some(n) = resolved.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let replay_path = match (&cli.replay, &cli.command) {
        (Some(p), None) => Some(p.clone()),
        (None, Some(Command::Replay(a))) => Some(a.record.clone()),
        (Some(_), Some(_)) => return Err(Error::InvalidParameter("--replay takes no subcommand".into())),
        (None, None) => return Err(Error::InvalidParameter("no subcommand given; see --help".into())),
        _ => None,
    };
    if let Some(path) = replay_path {
        return replay(&path, &resolved);
    }
    let cmd = cli.command.as_ref().expect("checked above");
    let rec = execute(cmd, &resolved.settings, &resolved)?;
    emit(&rec.0, rec.1.as_ref(), &resolved)
}

fn execute(cmd: &Command, settings: &Settings, resolved: &Resolved) -> Result<(RunRecord, Option<Vec<Vec<String>>>)> {
    let start = Instant::now();
    let ctx = Context {
        settings,
        cache_dir: resolved.cache_dir.as_deref(),
    };
    let Outcome {
        result,
        method,
        warnings,
        table,
    } = commands::run(cmd, &ctx)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let params = match serde_json::to_value(cmd).map_err(|e| Error::Format(e.to_string()))? {
        Value::Object(mut m) => m.remove(command_name(cmd)).unwrap_or(Value::Null),
        other => other,
    };
    let rec = RunRecord {
        schema_version: SCHEMA_VERSION,
        command: command_name(cmd).to_string(),
        params,
        result,
        provenance: Provenance {
            settings: settings.clone(),
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: start.elapsed().as_secs_f64(),
            method,
            warnings,
        },
    };
    Ok((rec, table))
}

fn emit(rec: &RunRecord, table: Option<&Vec<Vec<String>>>, resolved: &Resolved) -> Result<()> {
    if let Some(dir) = &resolved.results_dir {
        record::append(dir, rec)?;
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match resolved.format {
        Format::Json => {
            let line = serde_json::to_string(rec).map_err(|e| Error::Format(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
        Format::Csv => {
            let rows = table.cloned().unwrap_or_else(|| flat_rows(&rec.result));
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.write_record(&row).map_err(|e| Error::Format(e.to_string()))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// `field,value` rows for results without a natural table.
fn flat_rows(result: &Value) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["field".to_string(), "value".to_string()]];
    if let Value::Object(m) = result {
        for (k, v) in m {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            rows.push(vec![k.clone(), text]);
        }
    }
    rows
}

fn replay(path: &Path, resolved: &Resolved) -> Result<()> {
    let records = record::read_all(path)?;
    let mut mismatches = Vec::new();
    let mut outcomes = Vec::new();
    for (i, old) in records.iter().enumerate() {
        let cmd: Command = serde_json::from_value(json!({ old.command.clone(): old.params.clone() }))
            .map_err(|e| Error::Format(format!("record {}: {e}", i + 1)))?;
        let settings = &old.provenance.settings;
        let verdict = match execute(&cmd, settings, resolved) {
            Ok((new, _)) => {
                let tol = if settings.tol > 0.0 { settings.tol } else { 1e-9 };
                if record::results_match(&old.result, &new.result, tol) {
                    "match".to_string()
                } else {
                    mismatches.push(i + 1);
                    "mismatch".to_string()
                }
            }
            Err(e) => {
                mismatches.push(i + 1);
                format!("error: {e}")
            }
        };
        outcomes.push(json!({"record": i + 1, "command": old.command, "verdict": verdict}));
    }
    let rec = RunRecord {
        schema_version: SCHEMA_VERSION,
        command: "replay".into(),
        params: json!({"record": path}),
        result: json!({"records": records.len(), "mismatches": mismatches, "outcomes": outcomes}),
        provenance: Provenance {
            settings: resolved.settings.clone(),
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: 0.0,
            method: None,
            warnings: Vec::new(),
        },
    };
    let line = serde_json::to_string(&rec).map_err(|e| Error::Format(e.to_string()))?;
    println!("{line}");
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(Error::Tolerance(format!("replay mismatches in records {mismatches:?}")))
    }
}
