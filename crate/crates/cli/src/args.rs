use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "g2flow",
    version,
    about = "Identity suites, flows, symbol scans and reduction checks for G2-structures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

/// Flags shared by every subcommand. Each has a `G2FLOW_` environment
/// override.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON configuration file; built-in defaults when absent.
    #[arg(long, global = true, env = "G2FLOW_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, env = "G2FLOW_OUT", default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, env = "G2FLOW_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Worker threads for data-parallel kernels.
    #[arg(long, global = true, env = "G2FLOW_THREADS")]
    pub threads: Option<usize>,
    /// Multiplies every pass/fail tolerance.
    #[arg(long, global = true, env = "G2FLOW_TOLERANCE_SCALE", default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Algebraic and grid identity suites; writes identities.json.
    Identities,
    /// Integrates the flow; writes diagnostics.csv and run.json.
    Flow,
    /// Principal symbol sharpness scan; writes symbol.csv.
    Symbol,
    /// Six-dimensional reduction residuals; writes reduce.json.
    Reduce,
}
