use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use netmean_cli::{CommandKind, Options};

/// Narrative dynamics on directed networks: root analysis, mean-type
/// iteration, invariant means, and row-stochastic limits.
#[derive(Parser)]
#[command(name = "netmean", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural analysis: SCCs, condensation, sources, root, ergodicity
    Analyze(CommonArgs),
    /// Iterate the mapping from each initial vector and classify the outcome
    Simulate(CommonArgs),
    /// Estimate the invariant mean and check root-only dependence
    Invariant(CommonArgs),
    /// Construct a non-uniqueness witness for a non-ergodic root
    Witness(CommonArgs),
    /// Limit of the row-stochastic matrix of an affine system
    Limit(CommonArgs),
    /// Run the property audit suite
    Verify(CommonArgs),
    /// Run every command listed in the scenario's `commands` field
    Batch(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (JSON)
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for reports and artifacts
    #[arg(long)]
    out: PathBuf,
    /// Convergence tolerance override
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration budget override
    #[arg(long)]
    max_iter: Option<usize>,
    /// Seed for randomized audits
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exact rational arithmetic for matrix limits
    #[arg(long)]
    exact: bool,
    /// Witness value for the first region (defaults derive from the domain)
    #[arg(long)]
    gamma: Option<f64>,
    /// Witness value for the complementary region
    #[arg(long)]
    delta: Option<f64>,
    /// Sample count for randomized audits
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

impl From<CommonArgs> for Options {
    fn from(args: CommonArgs) -> Self {
        Options {
            scenario: args.scenario,
            out: args.out,
            tol: args.tol,
            max_iter: args.max_iter,
            seed: args.seed,
            exact: args.exact,
            gamma: args.gamma,
            delta: args.delta,
            samples: args.samples,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Analyze(a) => (CommandKind::Analyze, a),
        Command::Simulate(a) => (CommandKind::Simulate, a),
        Command::Invariant(a) => (CommandKind::Invariant, a),
        Command::Witness(a) => (CommandKind::Witness, a),
        Command::Limit(a) => (CommandKind::Limit, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::Batch(a) => (CommandKind::Batch, a),
    };
    if let Err(err) = netmean_cli::run(kind, &args.into()) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
