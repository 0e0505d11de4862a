use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Liquidity-pool exit-scam simulator and detector.
///
/// Every flag can also be set through an `FRP_`-prefixed environment
/// variable; flags take precedence.
#[derive(Debug, Parser)]
#[command(name = "rugscope", version)]
pub struct Cli {
    /// Worker threads; 0 uses one per CPU.
    #[arg(long, global = true, env = "FRP_WORKERS", default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate labeled synthetic traces from a scenario.
    Simulate(SimulateArgs),
    /// Label every pool of a trace corpus.
    Detect(DetectArgs),
    /// Label a corpus and write actor, action and category statistics.
    Measure(MeasureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

impl From<Format> for rugscope::ledger::TraceFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Jsonl => rugscope::ledger::TraceFormat::Jsonl,
            Format::Csv => rugscope::ledger::TraceFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (JSON).
    #[arg(
        long,
        env = "FRP_SCENARIO",
        conflicts_with = "preset",
        required_unless_present = "preset"
    )]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario: libra, canonical, benign or mixed.
    #[arg(long, env = "FRP_PRESET")]
    pub preset: Option<String>,
    /// Overrides the scenario seed.
    #[arg(long, env = "FRP_SEED")]
    pub seed: Option<u64>,
    /// Overrides the scenario fee rate.
    #[arg(long, env = "FRP_FEE")]
    pub fee: Option<String>,
    /// Output directory for the trace file and manifest.json.
    #[arg(long, env = "FRP_OUT")]
    pub out: PathBuf,
    #[arg(long, env = "FRP_FORMAT", value_enum, default_value = "jsonl")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct DetectorArgs {
    /// Trace file or directory of .jsonl/.csv files.
    #[arg(long, env = "FRP_INPUT")]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, env = "FRP_OUT")]
    pub out: PathBuf,
    /// Input format; by default taken from each file's extension.
    #[arg(long, env = "FRP_FORMAT", value_enum)]
    pub format: Option<Format>,
    /// Single-transaction impact threshold.
    #[arg(long, env = "FRP_THETA", default_value = "0.9")]
    pub theta: String,
    #[arg(long, env = "FRP_MAX_LIFETIME_DAYS", default_value_t = 100.0)]
    pub max_lifetime_days: f64,
    /// Swap fee used to reconstruct reserves.
    #[arg(long, env = "FRP_FEE", default_value = "0.003")]
    pub fee: String,
    /// Extra LP burn/lock address; the zero and 0x…dead addresses always count.
    #[arg(long = "burn-address", env = "FRP_BURN_ADDRESS", value_delimiter = ',')]
    pub burn_addresses: Vec<String>,
    /// Address treated as part of every pool's owner set.
    #[arg(
        long = "owner-address",
        env = "FRP_OWNER_ADDRESS",
        value_delimiter = ','
    )]
    pub owner_addresses: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Also count detections over the grid lo:hi:step.
    #[arg(long, env = "FRP_THETA_SWEEP")]
    pub theta_sweep: Option<String>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
}
