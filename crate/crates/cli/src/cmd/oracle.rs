//! `placenav oracle` — verify the exact planner against enumeration.

use clap::Args;

use placenav_core::oracle::{run_battery, OracleParams};

use crate::errors::CliError;

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Number of randomized instances.
    #[arg(long, default_value_t = 100)]
    pub instances: usize,

    /// Maximum grid side length.
    #[arg(long, default_value_t = 5)]
    pub max_grid: usize,

    /// Maximum planning horizon (enumeration must stay within budget).
    #[arg(long, default_value_t = 5)]
    pub max_horizon: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: OracleArgs) -> Result<(), CliError> {
    let params = OracleParams {
        instances: args.instances,
        max_grid: args.max_grid,
        max_horizon: args.max_horizon,
        seed: args.seed,
    };
    let report = run_battery(&params).map_err(CliError::from)?;
    println!("instances={}", report.instances);
    println!("max_score_gap={:e}", report.max_score_gap);
    println!("tie_cases={}", report.tie_cases);
    println!("mismatches={}", report.mismatches);
    if report.passed() {
        println!("result=PASS");
        Ok(())
    } else {
        println!("result=FAIL");
        Err(CliError::OracleFailure(format!(
            "{} trajectory mismatches, max score gap {:e}",
            report.mismatches, report.max_score_gap
        )))
    }
}
