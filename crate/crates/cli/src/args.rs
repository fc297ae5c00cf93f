use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Solve finite team decision problems under several correlation classes.
#[derive(Debug, Parser)]
#[command(name = "teamcorr", version)]
pub struct Cli {
    /// Write CSV results to this file, or to stdout with `-`.
    #[arg(long, global = true)]
    pub out: Option<String>,

    /// Suppress the text report.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Worker thread cap.
    #[arg(long, global = true, env = "TEAMCORR_THREADS")]
    pub threads: Option<usize>,

    /// Append a wall-time column to CSV rows. Timed output is not reproducible byte for byte.
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal value of a problem file in one correlation class.
    Solve(SolveArgs),
    /// Values of every class, checked against the inclusion order.
    Hierarchy(HierarchyArgs),
    /// Quantized Witsenhausen problem over a refinement chain of grids.
    Witsenhausen(WitsenhausenArgs),
    /// Numerical checks of the counterexamples.
    Counterexample(CounterexampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Class {
    Classical,
    /// XOR-shaped two-DM teams only.
    Quantum,
    Ns,
    M,
    Cj,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: PathBuf,

    #[arg(long, value_enum)]
    pub class: Class,

    /// Seed for the randomized quantum search.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write the LP dual certificate (ns and m classes).
    #[arg(long)]
    pub certificate: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HierarchyArgs {
    #[arg(long)]
    pub problem: PathBuf,

    /// Include the quantum value when the team is XOR shaped.
    #[arg(long)]
    pub xor: bool,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct WitsenhausenArgs {
    #[arg(long, default_value_t = 0.2)]
    pub k: f64,

    #[arg(long, default_value_t = 5.0)]
    pub sigma: f64,

    /// Finest grid size; coarser grids halve it down to 16.
    #[arg(long, default_value_t = 64)]
    pub levels: usize,

    /// Quantizer half-range in units of sigma.
    #[arg(long, default_value_t = 4.0)]
    pub m_factor: f64,

    /// Initial quadrature panels per cell.
    #[arg(long, default_value_t = 2)]
    pub quad_panels: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Squarewave,
    Lc,
    Pomdp,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long, value_enum)]
    pub which: Which,

    /// Square-wave frequency. Without it the square-wave check runs n = 16, 32, …, 1024.
    #[arg(long)]
    pub n: Option<usize>,

    /// POMDP simulation horizon.
    #[arg(long, default_value_t = 10_000)]
    pub horizon: usize,

    /// POMDP runs for the action-marginal check.
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
