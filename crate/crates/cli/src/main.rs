//! `invbal`: simulations, table reproduction, IAP tools, the ratio bound,
//! the LP benchmark and run certification.

mod commands;
mod config;
mod output;
mod reproduce;

use clap::{Parser, Subcommand, ValueEnum};
use invbal_core::analysis::AnalysisError;
use invbal_core::engine::EngineError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit status 2 for bad input, 3 when an internal invariant breaks.
#[derive(Debug)]
pub enum Failure {
    User(String),
    Invariant(String),
}

impl Failure {
    pub fn user(msg: impl Into<String>) -> Self {
        Failure::User(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Failure::Invariant(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::User(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::User(m) => write!(f, "error: {m}"),
            Failure::Invariant(m) => write!(f, "internal invariant violated: {m}"),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        if e.is_invariant() {
            Failure::invariant(e.to_string())
        } else {
            Failure::user(e.to_string())
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Engine(e) => e.into(),
            AnalysisError::Numerical(_) | AnalysisError::Unbounded => Failure::invariant(e.to_string()),
            _ => Failure::user(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "invbal", version, about = "Batched inventory balancing workbench")]
pub struct Cli {
    /// Experiment config (JSON, see docs/config.schema.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replications: Option<usize>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the timestamp so reruns are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte-Carlo run of the policies in --config.
    Simulate,
    /// Regenerate a reference experiment next to its published values.
    Reproduce {
        #[arg(value_enum)]
        table: Table,
    },
    /// Interval assignment solver and checker.
    Iap {
        #[command(subcommand)]
        action: IapAction,
    },
    /// Competitive-ratio bound table.
    Bound {
        /// exponential, identity, step, or a JSON penalty object.
        #[arg(long, default_value = "exponential")]
        psi: String,
        /// Comma-separated thresholds; `sqrt` means ⌈√c0⌉.
        #[arg(long, default_value = "sqrt", value_delimiter = ',')]
        gamma: Vec<String>,
        #[arg(long, default_value = "100,10000,1000000", value_delimiter = ',')]
        c0: Vec<u64>,
    },
    /// Solve the batch-specified LP for one BIB run and compare revenues.
    LpBenchmark {
        /// Instance JSON; a random tiny instance from --seed if absent.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        gamma: u64,
    },
    /// Build and check dual certificates for BIB runs.
    Certify {
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        gamma: u64,
        #[arg(long, default_value = "exponential")]
        psi: String,
    },
}

#[derive(Subcommand, Debug)]
enum IapAction {
    /// Labels and chains for "a b" lines with strictly increasing a.
    Solve {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Property verdicts for given labels.
    Check {
        input: PathBuf,
        /// Whitespace-separated labels, one per interval.
        #[arg(long)]
        labels: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Table {
    Stylized,
    Random,
    RandomNegative,
    RandomGeometric,
    CrUpperBounds,
}

fn dispatch(cli: &Cli) -> Result<String, Failure> {
    let opts = output::Options {
        deterministic: cli.deterministic,
    };
    match &cli.command {
        Command::Simulate => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| Failure::user("simulate needs --config"))?;
            let cfg = config::load(path)?;
            commands::simulate(cfg, cli.seed, cli.replications, cli.out.as_deref(), opts)
        }
        Command::Reproduce { table } => reproduce::report(*table, cli.seed.unwrap_or(0), cli.replications, opts),
        Command::Iap { action } => match action {
            IapAction::Solve { input, json } => commands::iap_solve(input, *json),
            IapAction::Check { input, labels } => commands::iap_check(input, labels),
        },
        Command::Bound { psi, gamma, c0 } => commands::bound(psi, gamma, c0, opts),
        Command::LpBenchmark { instance, gamma } => {
            commands::lp_benchmark(instance.as_deref(), *gamma, cli.seed.unwrap_or(0), opts)
        }
        Command::Certify { instance, gamma, psi } => commands::certify(
            instance.as_deref(),
            *gamma,
            psi,
            cli.seed.unwrap_or(0),
            cli.replications.unwrap_or(100),
            opts,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = dispatch(&cli).and_then(|text| output::emit(&text, cli.out.as_deref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
