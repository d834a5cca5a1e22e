use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "convtile",
    version,
    about = "Data-movement modeling and multi-level tile-size optimization for convolution loop nests"
)]
pub struct Cli {
    /// Worker threads for parallel searches and simulations (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Write the JSON result to this file instead of stdout.
    #[arg(short = 'o', long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search tile sizes and loop orders minimizing the bottleneck cost.
    Optimize(OptimizeArgs),
    /// Evaluate the cost of explicit tiles and loop orders.
    Cost(CostArgs),
    /// List the eight loop-order classes.
    Classes,
    /// Evaluate single-level volumes over a tile grid.
    Enumerate(EnumerateArgs),
    /// Compare the single-level model against the cache simulator.
    Validate(ValidateArgs),
    /// Replay one configuration through the cache simulator.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(short = 'p', long)]
    pub problem: PathBuf,
    #[arg(short = 'm', long)]
    pub machine: PathBuf,
    /// uniform-class or cross-class.
    #[arg(long, default_value = "uniform-class")]
    pub mode: String,
    /// Class combinations solved in cross-class mode.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Split the work across the machine's cores.
    #[arg(long)]
    pub parallel: bool,
    /// Override the machine's core count; implies --parallel.
    #[arg(long)]
    pub cores: Option<u64>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Cache line size in words.
    #[arg(long)]
    pub line_size: Option<u64>,
    /// Search the register tile instead of fixing it to the microkernel.
    #[arg(long)]
    pub search_register: bool,
    /// Record wall-clock time in the output (breaks byte-identical reruns).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// Problem file; taken from --schedule when omitted there.
    #[arg(short = 'p', long)]
    pub problem: Option<PathBuf>,
    #[arg(short = 'm', long, conflicts_with = "capacity")]
    pub machine: Option<PathBuf>,
    /// Single cache level of this many words (or `inf`) above memory.
    #[arg(long)]
    pub capacity: Option<String>,
    /// Loop order per level, innermost level first; one value applies to all.
    #[arg(long, conflicts_with = "class")]
    pub perm: Vec<String>,
    /// Class per level (C1..C8), innermost level first; one value applies to all.
    #[arg(long)]
    pub class: Vec<String>,
    /// Tiles as `n,k,c,r,s,h,w` per level, levels separated by `;`, innermost
    /// first. JSON (an object or a list of objects) is accepted too.
    #[arg(long)]
    pub tiles: Option<String>,
    /// Per-core chunk sizes `n,k,c,r,s,h,w` for --parallel.
    #[arg(long)]
    pub chunks: Option<String>,
    /// Re-evaluate a schedule document written by `optimize`.
    #[arg(long, conflicts_with_all = ["perm", "class", "tiles", "chunks", "capacity"])]
    pub schedule: Option<PathBuf>,
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub cores: Option<u64>,
    #[arg(long)]
    pub line_size: Option<u64>,
    /// Use fractional trip counts instead of rounding them up.
    #[arg(long)]
    pub relaxed: bool,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(short = 'p', long)]
    pub problem: PathBuf,
    /// Take the capacity from this machine's --level.
    #[arg(short = 'm', long, conflicts_with = "capacity")]
    pub machine: Option<PathBuf>,
    /// Level name in --machine (default: innermost).
    #[arg(long, requires = "machine")]
    pub level: Option<String>,
    /// Keep only tiles fitting this many words (or `inf`).
    #[arg(long)]
    pub capacity: Option<String>,
    /// `divisors` or `step:K`.
    #[arg(long, default_value = "divisors")]
    pub grid: String,
    /// `classes` (the eight representatives) or `all` (5040 orders).
    #[arg(long, default_value = "classes")]
    pub perms: String,
    /// Draw this many (order, tile) pairs instead of sweeping the grid.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest number of cost evaluations allowed.
    #[arg(long, default_value_t = 100_000_000)]
    pub max_evals: u128,
    #[arg(long)]
    pub line_size: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(short = 'p', long)]
    pub problem: PathBuf,
    #[arg(short = 'm', long, conflicts_with = "capacity")]
    pub machine: Option<PathBuf>,
    #[arg(long, requires = "machine")]
    pub level: Option<String>,
    /// Cache capacity in words (or `inf`).
    #[arg(long)]
    pub capacity: Option<String>,
    /// Configurations from an `enumerate --samples` run.
    #[arg(long, conflicts_with = "configs")]
    pub from_enumerate: Option<PathBuf>,
    /// JSON list of `{"perm": .., "tiles": {..}}`.
    #[arg(long)]
    pub configs: Option<PathBuf>,
    /// Sample this many divisor-grid configurations fitting the capacity.
    #[arg(long, conflicts_with_all = ["from_enumerate", "configs"])]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `classes` or `all`, for --samples.
    #[arg(long, default_value = "classes")]
    pub perms: String,
    /// Only sample configurations meeting the adjacent-tile assumption.
    #[arg(long)]
    pub require_assumption: bool,
    /// Largest simulated trace per configuration, in accesses.
    #[arg(long)]
    pub budget: Option<u128>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Problem file; taken from --schedule when omitted there.
    #[arg(short = 'p', long)]
    pub problem: Option<PathBuf>,
    /// Loop order of the tile loops.
    #[arg(long)]
    pub perm: Option<String>,
    /// Tile as `n,k,c,r,s,h,w` (or a JSON object).
    #[arg(long)]
    pub tiles: Option<String>,
    /// Cache capacity in words (or `inf`).
    #[arg(long)]
    pub capacity: Option<String>,
    /// Simulate every level of a schedule document instead.
    #[arg(long, conflicts_with_all = ["perm", "tiles", "capacity"], requires = "machine")]
    pub schedule: Option<PathBuf>,
    #[arg(short = 'm', long)]
    pub machine: Option<PathBuf>,
    #[arg(long)]
    pub budget: Option<u128>,
}
