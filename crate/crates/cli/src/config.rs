use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vinogradov::{Budget, Error, Result};

use crate::args::{Cli, Format};

/// Defaults read from `--config`; command-line flags take precedence.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub budget: Option<Budget>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub eps: Option<f64>,
    pub c: Option<f64>,
    pub samples: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub results_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
    }
}

/// Settings that can change a result; stored in every record so that
/// replays run under the same conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub budget: Budget,
    pub seed: u64,
    pub tol: f64,
    pub eps: f64,
    pub c: f64,
    pub samples: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            budget: Budget::default(),
            seed: 0x5eed,
            tol: 1e-9,
            eps: 0.1,
            c: 10.0,
            samples: 1_000_000,
        }
    }
}

pub struct Resolved {
    pub settings: Settings,
    pub threads: Option<usize>,
    pub format: Format,
    pub results_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

pub fn resolve(cli: &Cli) -> Result<Resolved> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let defaults = Settings::default();
    let mut budget = file.budget.unwrap_or(defaults.budget);
    if let Some(v) = cli.max_entries {
        budget.max_entries = v;
    }
    if let Some(v) = cli.max_enumeration {
        budget.max_enumeration = v;
    }
    if let Some(v) = cli.max_grid {
        budget.max_grid = v;
    }
    Ok(Resolved {
        settings: Settings {
            budget,
            seed: cli.seed.or(file.seed).unwrap_or(defaults.seed),
            tol: file.tol.unwrap_or(defaults.tol),
            eps: file.eps.unwrap_or(defaults.eps),
            c: file.c.unwrap_or(defaults.c),
            samples: file.samples.unwrap_or(defaults.samples),
        },
        threads: cli.threads.or(file.threads),
        format: cli.format.or(file.format).unwrap_or(Format::Json),
        results_dir: cli.results_dir.clone().or(file.results_dir),
        cache_dir: cli.cache_dir.clone().or(file.cache_dir),
    })
}
