//! `placenav` — plan robot trajectories on grid maps from place-word
//! instructions.
//!
//! Subcommands: `fit` a place model from position/word observations,
//! `field` to dump the per-cell instruction likelihood, `plan` a
//! trajectory with any of the five methods, `eval` a scenario batch with
//! success-rate metrics, and `oracle` to verify the exact planner against
//! exhaustive enumeration.

mod cmd;
mod errors;

use clap::{Parser, Subcommand};

use errors::CliError;

#[derive(Parser)]
#[command(
    name = "placenav",
    version,
    about = "Trajectory planning on occupancy-grid maps from place-word instructions",
    after_help = "Thread count follows RAYON_NUM_THREADS; builds without the \
                  `parallel` feature run sequentially.\n\
                  Exit codes: 0 ok, 1 verification failure, 2 invalid input, \
                  3 instruction error, 4 planning infeasible."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a place model from training observations.
    Fit(cmd::fit::FitArgs),
    /// Compute and export the per-cell instruction log-likelihood field.
    Field(cmd::field::FieldArgs),
    /// Plan a trajectory with one of the methods A-E.
    Plan(cmd::plan::PlanArgs),
    /// Run a scenario batch and report NSR / Near-NSR / PL metrics.
    Eval(cmd::eval::EvalArgs),
    /// Verify the exact planner against brute-force enumeration.
    Oracle(cmd::oracle::OracleArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result: Result<(), CliError> = match cli.command {
        Command::Fit(args) => cmd::fit::run(args),
        Command::Field(args) => cmd::field::run(args),
        Command::Plan(args) => cmd::plan::run(args),
        Command::Eval(args) => cmd::eval::run(args),
        Command::Oracle(args) => cmd::oracle::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
