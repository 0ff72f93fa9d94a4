use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "vino", version, about = "Exact counts and circle-method numerics for inhomogeneous Vinogradov systems")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON file with defaults for budgets, tolerances, seed and directories.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Append each run record to `<dir>/runs.jsonl`.
    #[arg(long, global = true)]
    pub results_dir: Option<PathBuf>,
    /// Directory for persisted count maps.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_entries: Option<u64>,
    #[arg(long, global = true)]
    pub max_enumeration: Option<u64>,
    #[arg(long, global = true)]
    pub max_grid: Option<u64>,
    /// Re-run every record in a JSON-lines file and compare results.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Exact solution counts.
    Count(CountArgs),
    /// Counts over increasing X, fitted and compared with the catalog.
    Ladder(LadderArgs),
    /// Fit an exponent to (X, count) points.
    Fit(FitArgs),
    /// Theoretical exponent records for (s, k, h).
    Catalog(CatalogArgs),
    /// Exponential sums, the kernel and the oscillatory integral.
    Sums(SumsArgs),
    /// Arc membership, box measures and the four-way dissection.
    Arcs(ArcsArgs),
    /// Truncated singular series and singular integral.
    Singular(SingularArgs),
    /// Circle-method prediction against the exact count.
    Predict(PredictArgs),
    /// Randomized identity suites.
    Verify(VerifyArgs),
    /// Re-run the records of a JSON-lines file.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    Auto,
    Brute,
    Mitm,
    Dft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    /// `J_{s,k}(X;h)`.
    J,
    /// `J*_{k,k}(X;h)` with all `x_i != y_m`.
    Jstar,
    /// The mixed system with `u` Weyl and `r` shifted variables.
    Mixed,
    Omega1,
    Omega2,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CountArgs {
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "X", alias = "x")]
    #[serde(rename = "X")]
    pub x: u64,
    /// Comma-separated signed integers; its length is k unless --k is given.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: CountMethod,
    #[arg(long, value_enum, default_value = "j")]
    pub system: System,
    #[arg(long)]
    pub u: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct LadderArgs {
    #[arg(long)]
    pub s: usize,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Strictly increasing X values, comma-separated.
    #[arg(long)]
    pub xs: String,
    #[arg(long, default_value_t = 0.4)]
    pub slack: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV with `X` and `count` columns, as written by `ladder --format csv`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Inline points `X:count,X:count,...`.
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    #[arg(long, default_value_t = 0.4)]
    pub slack: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CatalogArgs {
    #[arg(long)]
    pub s: usize,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SumsArgs {
    #[command(subcommand)]
    pub kind: SumKind,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumKind {
    /// `f(alpha; X)`.
    Weyl {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long = "X", alias = "x")]
        #[serde(rename = "X")]
        x: u64,
    },
    /// `g(alpha, gamma; X)`.
    Shifted {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long = "X", alias = "x")]
        #[serde(rename = "X")]
        x: u64,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
    },
    /// `K(gamma) = sum_{z <= X} e(-gamma z)`.
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long = "X", alias = "x")]
        #[serde(rename = "X")]
        x: u64,
    },
    /// `S(q, a)`.
    Complete {
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
    },
    /// `I(beta)`, or `X I(beta_1 X, ..., beta_k X^k)` with --X.
    Oscillatory {
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(long = "X", alias = "x")]
        #[serde(rename = "X")]
        x: Option<u64>,
    },
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ArcsArgs {
    /// Dissection tag W1..W4 of --alpha.
    #[arg(long)]
    pub classify: bool,
    /// Measure of the --vbox or --bbox region.
    #[arg(long)]
    pub measure: bool,
    /// One-dimensional major arc of the last coordinate, Q = X^exponent.
    #[arg(long)]
    pub major: bool,
    /// k-dimensional arc witness, Z = X^exponent.
    #[arg(long)]
    pub kdim: bool,
    /// Monte Carlo moment over the box and the conjectured bound.
    #[arg(long)]
    pub moment: bool,
    #[arg(long)]
    pub k: usize,
    #[arg(long = "X", alias = "x")]
    #[serde(rename = "X")]
    pub x: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// `m,A`.
    #[arg(long)]
    pub vbox: Option<String>,
    /// `theta_1,...,theta_k`.
    #[arg(long, allow_hyphen_values = true)]
    pub bbox: Option<String>,
    /// Arc parameter exponent `num/den`.
    #[arg(long)]
    pub exponent: Option<String>,
    #[arg(long)]
    pub s: Option<u32>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SingularArgs {
    #[arg(long)]
    pub series: bool,
    #[arg(long)]
    pub integral: bool,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub s: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    #[arg(long, default_value_t = 40)]
    pub qmax: u64,
    #[arg(long = "X", alias = "x", default_value_t = 1)]
    #[serde(rename = "X")]
    pub x: u64,
    #[arg(long = "B", default_value_t = 50.0)]
    #[serde(rename = "B")]
    pub b: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    #[arg(long = "X", alias = "x")]
    #[serde(rename = "X")]
    pub x: u64,
    #[arg(long, default_value_t = 40)]
    pub qmax: u64,
    #[arg(long = "B", default_value_t = 50.0)]
    #[serde(rename = "B")]
    pub b: f64,
    /// Skip the exact count.
    #[arg(long)]
    pub no_exact: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Suite name, or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A JSON-lines file of run records, such as `runs.jsonl`
    pub record: PathBuf,
}
