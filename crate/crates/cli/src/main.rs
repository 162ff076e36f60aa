//! `qkdlab`: seeded, reproducible runs of the laboratory experiments.
//!
//! Exit codes: 0 success, 1 invariant or assertion failure, 2 usage or
//! configuration error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "qkdlab", version, about = "Composable QKD security laboratory")]
pub struct Cli {
    /// Seed for every random choice; recorded in the report.
    #[arg(long, global = true, env = "QKDLAB_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Write the report here (atomically) instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Add a wall-clock timestamp; reports are otherwise byte-reproducible.
    #[arg(long, global = true)]
    pub timestamp: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the one-time-pad attack and the accessible-information/secrecy gap.
    AttackDemo(AttackArgs),
    /// Assess a cq-state read from a JSON file.
    Secrecy(SecrecyArgs),
    /// Find key-stream parameters meeting a target ε.
    KeystreamPlan(PlanArgs),
    /// Per-round ε bounds of a key-stream configuration.
    KeystreamSchedule(ScheduleArgs),
    /// Simulate the key stream against a mock key source.
    KeystreamSimulate(SimulateArgs),
    /// Check the composition bound on a key source followed by the one-time pad.
    VerifyComposition(ComposeArgs),
    /// Doubled-bid auction against textbook RSA.
    RsaDemo(RsaArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AttackArgs {
    /// Qubits held by the adversary.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(2..=7))]
    pub n: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Evaluations for the accessible-information search.
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SecrecyArgs {
    /// cq-state JSON file (see docs/schema.md).
    pub state: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub eps_correct: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps_robust: f64,
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
}

#[derive(Debug, Args, Serialize, Clone, Copy)]
pub struct Constants {
    #[arg(long, default_value_t = qkdlab::keystream::PAPER_GAMMA)]
    pub gamma: f64,
    #[arg(long, default_value_t = qkdlab::keystream::PAPER_RHO)]
    pub rho: f64,
    #[arg(long, default_value_t = qkdlab::keystream::PAPER_NU)]
    pub nu: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps0: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PlanArgs {
    #[arg(long, default_value_t = 1e-9)]
    pub target: f64,
    #[command(flatten)]
    pub constants: Constants,
    #[arg(long, default_value_t = qkdlab::keystream::DEFAULT_ELL)]
    pub ell: u64,
    #[arg(long, default_value_t = qkdlab::keystream::DEFAULT_HORIZON)]
    pub horizon: u64,
}

#[derive(Debug, Args, Serialize, Clone, Copy)]
pub struct StreamArgs {
    #[command(flatten)]
    pub constants: Constants,
    #[arg(long)]
    pub n0: u64,
    #[arg(long)]
    pub c: f64,
    #[arg(long, default_value_t = qkdlab::keystream::DEFAULT_ELL)]
    pub ell: u64,
    #[arg(long)]
    pub ell0: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    #[arg(long, default_value_t = 50)]
    pub rounds: u64,
    /// Use the real-valued schedule instead of ceilings.
    #[arg(long)]
    pub real: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Charging {
    PerAttempt,
    PerRound,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    #[arg(long, default_value_t = 100)]
    pub rounds: u64,
    #[arg(long, default_value_t = 0.0)]
    pub abort_prob: f64,
    #[arg(long, value_enum, default_value_t = Charging::PerAttempt)]
    pub charging: Charging,
    /// Reserve key for retried attempts; defaults to a high-confidence estimate.
    #[arg(long)]
    pub reserve: Option<u64>,
    /// Include the emitted key stream in the JSON report.
    #[arg(long)]
    pub include_stream: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Perfect,
    Biased,
    Attack,
}

#[derive(Debug, Args, Serialize)]
pub struct ComposeArgs {
    #[arg(long, value_enum, default_value_t = Source::Biased)]
    pub source: Source,
    /// Message and key length for the perfect and biased sources.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Planted bias of the biased source.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Register size of the attack source.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(2..=10))]
    pub n: u64,
    /// Declared ε of the attack source; defaults to its per-qubit accessible-information bound.
    #[arg(long)]
    pub declared_eps: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Exact enumeration instead of sampling.
    #[arg(long)]
    pub exact: bool,
    /// Succeed only if some distinguisher breaks the declared bound.
    #[arg(long)]
    pub expect_violation: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct RsaArgs {
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(16..=64))]
    pub bits: u32,
    #[arg(long, default_value_t = 1000)]
    pub bid: u64,
    /// Also run this many auctions with random keys and bids.
    #[arg(long, default_value_t = 0)]
    pub sweep: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(outcome) => match output::emit(&cli, &outcome) {
            Ok(()) if outcome.pass => ExitCode::SUCCESS,
            Ok(()) => {
                eprintln!("qkdlab: {}", outcome.failure.as_deref().unwrap_or("check failed"));
                ExitCode::from(1)
            }
            Err(e) => {
                eprintln!("qkdlab: cannot write output: {e}");
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("qkdlab: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
