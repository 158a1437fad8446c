//! `ergodic`: load a system file, run a check or trace, emit JSON or CSV.
//!
//! Exit status: 0 when every check passes, 1 when a mathematical check
//! fails (the report carries the replay data), 2 on bad input.

mod commands;
mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ergodic_core::verify::Fault;
use ergodic_core::Horizon;

#[derive(Debug, Parser)]
#[command(name = "ergodic", version, about = "Birkhoff averages, maximal functions and ergodic-theorem checks")]
pub struct Cli {
    /// Output format (default: csv for `converge`, json otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Seed for fuzzing and random sample plans.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a system file describes a measure-preserving system.
    Validate {
        /// System file, or an inline JSON description.
        system: String,
    },
    /// Birkhoff average A_k f(x).
    Average {
        system: String,
        /// Point index (finite) or position in [0, 1); `p/q` is iterated exactly.
        #[arg(long)]
        x: String,
        #[arg(long)]
        k: usize,
    },
    /// Maximal function f*_N(x).
    Maximal {
        system: String,
        #[arg(long)]
        x: String,
        #[arg(long = "N", default_value = "inf")]
        horizon: Horizon,
    },
    /// Greedy zero-run / positive-block decomposition of the orbit of x.
    Decompose {
        system: String,
        #[arg(long)]
        x: String,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Invariant λ: one value, or one comma-separated value per point.
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        /// Include the terms t_k and level-set membership along the orbit.
        #[arg(long)]
        trace: bool,
    },
    /// Run one theorem check.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        system: String,
        #[command(flatten)]
        params: CheckParams,
    },
    /// Exact maximal inequality on random finite systems.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 64)]
        size_bound: usize,
        #[arg(long, value_enum, default_value = "none")]
        inject: Injection,
    },
    /// Plot-ready Cesàro trace: rows (k, A_k f(x)).
    Converge {
        system: String,
        #[arg(long)]
        x: String,
        #[arg(long = "K")]
        k: usize,
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Run every applicable check and write `{system, reports}`.
    Report {
        system: String,
        #[command(flatten)]
        params: CheckParams,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Maximal,
    ErgodicLimit,
    Duality,
    CorollaryLambda,
    Final,
    Truncation,
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Injection {
    None,
    NonStrictLevelSet,
    UnnormalizedWeights,
}

impl From<Injection> for Fault {
    fn from(i: Injection) -> Self {
        match i {
            Injection::None => Fault::None,
            Injection::NonStrictLevelSet => Fault::NonStrictLevelSet,
            Injection::UnnormalizedWeights => Fault::UnnormalizedWeights,
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct CheckParams {
    /// λ: a rational, a comma list (one per point), or for interval
    /// systems a float or `non-integrable`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long = "N", default_value = "inf")]
    pub horizon: Horizon,
    /// Corollary index n: `3`, `1,2,4` or `1..16`.
    #[arg(long = "n", default_value = "1")]
    pub n: String,
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Truncation levels (default: sorted distinct |f|).
    #[arg(long = "s", allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Monte Carlo sample count for interval systems.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "random")]
    pub plan: PlanKind,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long = "K", default_value_t = 1_000_000)]
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlanKind {
    Grid,
    Random,
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match commands::run(&cli) {
        Ok(outcome) => outcome,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(err) = emit(&outcome.text, cli.out.as_ref()) {
        eprintln!("error: cannot write output: {err}");
        return ExitCode::from(2);
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
