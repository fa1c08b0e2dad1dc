use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qbd2d", version, about = "Stability and efficiency analysis of two-dimensional QBD processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check block signs, row sums and irreducibility of a model.
    Validate(CommonArgs),
    /// Mean drift of the interior chain and of both axis chains.
    Drift(CommonArgs),
    /// Positive recurrent, transient or inconclusive (exit code 2).
    Classify(CommonArgs),
    /// Largest stable value of one arrival rate and the efficiency there.
    Efficiency(EfficiencyArgs),
    /// Efficiency over a grid of fixed rates.
    Table(TableArgs),
    /// Monte Carlo drift estimate or occupancy summary.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    PrioritySetup,
    PrioritySetupMapph,
    AdditionalServer,
    IndependentPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scan {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Full,
    Plus,
    Axis1,
    Axis2,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Built-in model family.
    #[arg(long, value_enum, conflicts_with = "model", required_unless_present = "model")]
    pub builtin: Option<Builtin>,
    /// JSON model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub l1: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Setup rate of queue 1 (priority-setup families).
    #[arg(long)]
    pub g1: Option<f64>,
    /// Setup rate of queue 2 (priority-setup families).
    #[arg(long)]
    pub g2: Option<f64>,
    /// Erlang order of every distribution in priority-setup-mapph.
    #[arg(long, default_value_t = 2)]
    pub erlang: usize,
}

#[derive(Debug, Clone, Args)]
pub struct Tolerances {
    /// Zero band for drift signs, relative to the largest rate.
    #[arg(long, default_value_t = 1e-9)]
    pub eps: f64,
    /// Levels per axis of the truncations used for class-structure checks.
    #[arg(long)]
    pub trunc: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub tolerances: Tolerances,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct EfficiencyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub tolerances: Tolerances,
    /// Arrival rate to scan; the other one stays fixed.
    #[arg(long, value_enum, default_value_t = Scan::L2)]
    pub scan: Scan,
    /// Bisection stops when the bracket is this narrow.
    #[arg(long = "tol", default_value_t = 1e-8)]
    pub bisection_tol: f64,
    /// Lower end of the bracket (default 1e-4).
    #[arg(long)]
    pub lo: Option<f64>,
    /// Upper end of the bracket (default: saturation rate - 1e-4).
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub tolerances: Tolerances,
    #[arg(long, value_enum, default_value_t = Scan::L2)]
    pub scan: Scan,
    /// Fixed rates as `lo:hi:step`, both ends included.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    #[arg(long = "tol", default_value_t = 1e-8)]
    pub bisection_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Variant::Plus)]
    pub variant: Variant,
    /// Steps per trial (the horizon k), or total steps with --occupancy.
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Summarize one long run of the full chain instead of estimating drift.
    #[arg(long)]
    pub occupancy: bool,
    /// Steps discarded before recording with --occupancy.
    #[arg(long, default_value_t = 0)]
    pub burn_in: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// Parses `lo:hi:step`. Points are rounded to 12 decimals so that
/// `0.1:0.9:0.1` yields `0.3` rather than `0.30000000000000004`.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("expected lo:hi:step, got {s:?}"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if step.is_nan() || step <= 0.0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(format!("need finite lo <= hi and step > 0, got {s:?}"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok(Grid((0..=n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect()))
}
