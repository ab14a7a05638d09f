use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "sfsel",
    version,
    about = "Minimum-cost output-feedback selection for structured systems"
)]
pub struct Cli {
    #[command(flatten)]
    pub shared: Shared,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Shared {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Dot,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a feedback set for structurally fixed modes.
    CheckSfm(CheckArgs),
    /// Select a feedback set.
    Solve(SolveArgs),
    /// Generate an instance.
    Gen(GenArgs),
    /// Run a benchmark suite against the oracle.
    Bench(BenchArgs),
    /// Show an intermediate reduction.
    Reduce(ReduceArgs),
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub input: PathBuf,
    /// Comma-separated links, e.g. "u1:y4,u5:y5".
    #[arg(long = "fs")]
    pub feedback: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Auto,
    Potential,
    Backedge,
    Hierarchical,
    Oracle,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Auto)]
    pub algo: Algo,
    /// Solve the raw cycle list without merging dominated cycles.
    #[arg(long)]
    pub no_merge: bool,
    /// Drop links that break the back-edge structure instead of refusing.
    #[arg(long)]
    pub project: bool,
    /// Largest number of links the oracle enumerates.
    #[arg(long, default_value_t = 20)]
    pub budget: usize,
    /// Include the solver trace.
    #[arg(long)]
    pub trace: bool,
    /// Also run the oracle and report the ratio.
    #[arg(long)]
    pub compare: bool,
    /// Read costs as exact rationals.
    #[arg(long)]
    pub exact: bool,
    /// Keep wall-clock timings in JSON output.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// dag, hierarchy, backedge or selfdamped.
    #[arg(long, required_unless_present = "set_cover")]
    pub kind: Option<String>,
    /// Build the hardness instance of a weighted set-cover file instead.
    #[arg(long, conflicts_with = "kind")]
    pub set_cover: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// States (SCC nodes for hierarchy).
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub edge_density: Option<f64>,
    #[arg(long)]
    pub io_density: Option<f64>,
    #[arg(long)]
    pub link_density: Option<f64>,
    /// 0 keeps every drawn link.
    #[arg(long)]
    pub max_links: Option<usize>,
    #[arg(long)]
    pub cost_min: Option<u32>,
    #[arg(long)]
    pub cost_max: Option<u32>,
    #[arg(long)]
    pub fractional: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Suite file; the bundled smoke suite when omitted.
    pub suite: Option<PathBuf>,
    /// Also write the CSV table here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Leave the time column empty so reruns are byte-identical.
    #[arg(long)]
    pub no_time: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Reduced graph D_R with its cheapest links.
    Dr,
    /// Cycle list of D_R.
    Cycles,
    /// Weighted set cover of a back-edge instance.
    Setcover,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Target::Dr)]
    pub to: Target,
    #[arg(long)]
    pub no_merge: bool,
    #[arg(long)]
    pub project: bool,
}
