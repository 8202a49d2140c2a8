//! `placenav eval` — run a scenario batch and report metrics.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use placenav_core::eval::{
    aggregate, build_trial, loglik_series, metrics_csv, metrics_table, run_trials, ScenarioFile,
    TrialResult,
};
use placenav_core::export::{field_to_pgm, ExportError};
use placenav_core::grid::save_map;
use placenav_core::planner::TrajectoryRecord;

use super::{flip_rows, write_file};
use crate::errors::CliError;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,

    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,

    /// Also dump the generated map and emission field of trial 0.
    #[arg(long)]
    pub dump: bool,
}

#[derive(Serialize)]
struct TrialRecord {
    trial: usize,
    results: Vec<TrialResult>,
    trajectories: Vec<Option<TrajectoryRecord>>,
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let bytes = fs::read(&args.scenario)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.scenario.display())))?;
    let file = ScenarioFile::from_json(&bytes)?;

    let runs = run_trials(&file)?;

    // geometry and action set are identical across trials
    let reference = build_trial(&file, 0)?;
    let geometry = &reference.costmap.geometry;

    let mut trial_records = Vec::with_capacity(runs.len());
    let mut all_results = Vec::new();
    for (trial, methods) in runs.iter().enumerate() {
        let results: Vec<TrialResult> = methods.iter().map(|m| m.result.clone()).collect();
        let trajectories = methods
            .iter()
            .map(|m| {
                m.trajectory
                    .as_ref()
                    .map(|t| TrajectoryRecord::new(t, geometry, &reference.actions))
            })
            .collect();
        all_results.extend(results.iter().cloned());
        trial_records.push(TrialRecord {
            trial,
            results,
            trajectories,
        });
    }

    let rows = aggregate(&all_results);
    write_file(&args.out, "metrics.csv", &metrics_csv(&rows))?;
    let mut metrics_json = serde_json::to_vec_pretty(&rows)?;
    metrics_json.push(b'\n');
    write_file(&args.out, "metrics.json", &metrics_json)?;

    // per-step curves of the first trial
    if let Some(first) = trial_records.first() {
        write_file(
            &args.out,
            "loglik_series.csv",
            &loglik_series(&first.results, file.horizon),
        )?;
    }

    let mut results_json = serde_json::to_vec_pretty(&trial_records)?;
    results_json.push(b'\n');
    write_file(&args.out, "results.json", &results_json)?;

    if args.dump {
        let (pgm, meta) = save_map(&reference.grid, "map.pgm");
        write_file(&args.out, "map.pgm", &pgm)?;
        write_file(&args.out, "map.yaml", meta.as_bytes())?;
        let field = placenav_core::concept::emission_log_field(
            &reference.model,
            &reference.costmap,
            &reference.instruction,
        );
        let north_up = flip_rows(&field.values, field.width, field.height);
        let pgm = field_to_pgm(&north_up, field.width, field.height)
            .map_err(|e: ExportError| CliError::Validation(e.to_string()))?;
        write_file(&args.out, "field_trial0.pgm", &pgm)?;
    }

    print!("{}", metrics_table(&rows));
    println!("trials={}", runs.len());
    Ok(())
}
