//! `placenav plan` — plan one trajectory with any of the methods A-E.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use placenav_core::approx::{
    approx_plan_with_field, baseline_database, baseline_random, baseline_spatial_concept,
    GoalCandidate,
};
use placenav_core::concept::{emission_log_field, ScalarField};
use placenav_core::eval::Method;
use placenav_core::export::{field_to_csv, field_to_pgm};
use placenav_core::grid::Point2;
use placenav_core::planner::{
    plan_on_field, score_trajectory, PlanRequest, Trajectory, TrajectoryRecord,
};

use super::{
    flip_rows, load_model_file, load_training_file, write_file, ActionArgs, MapArgs, SayArgs,
};
use crate::errors::CliError;

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// Planner: viterbi (A), astar (B), sc (C), db (D) or random (E).
    #[arg(long)]
    pub method: Method,

    /// Fitted model file (all methods score trajectories under it).
    #[arg(long)]
    pub model: PathBuf,

    /// Training data; required by db and random.
    #[arg(long)]
    pub train: Option<PathBuf>,

    #[command(flatten)]
    pub map: MapArgs,

    #[command(flatten)]
    pub say: SayArgs,

    /// Start position in world meters.
    #[arg(long, num_args = 2, value_names = ["X", "Y"], required = true, allow_negative_numbers = true)]
    pub start: Vec<f64>,

    /// Planning horizon (steps).
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,

    /// Goal-candidate count for the astar method.
    #[arg(long, default_value_t = 10)]
    pub candidates: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub action_args: ActionArgs,

    /// Output directory for trajectory.json.
    #[arg(long)]
    pub out: PathBuf,

    /// Also export the emission field (field.csv, field.pgm).
    #[arg(long)]
    pub dump_field: bool,
}

#[derive(Serialize)]
struct Provenance {
    method: Method,
    method_letter: char,
    seed: Option<u64>,
    goal_candidates: Option<Vec<GoalCandidate>>,
    candidate_costs: Option<Vec<Option<f64>>>,
    chosen_candidate: Option<usize>,
    heuristic_capped: Option<bool>,
    goal: Option<[f64; 2]>,
}

#[derive(Serialize)]
struct PlanOutput {
    method: Method,
    horizon: usize,
    instruction: Vec<String>,
    trajectory: TrajectoryRecord,
    horizon_score: f64,
    provenance: Provenance,
}

pub fn run(args: PlanArgs) -> Result<(), CliError> {
    let model = load_model_file(&args.model)?;
    let (_, costmap) = args.map.load()?;
    let instruction = args.say.instruction(&model.vocabulary)?;
    let actions = args.action_args.action_set()?;

    let start_point = Point2::new(args.start[0], args.start[1]);
    let start = costmap.geometry.world_to_cell(start_point).ok_or_else(|| {
        CliError::Validation(format!(
            "start ({}, {}) is outside the map",
            start_point.x, start_point.y
        ))
    })?;
    if args.horizon == 0 {
        return Err(CliError::Validation("horizon must be at least 1".into()));
    }

    let request = PlanRequest {
        start,
        horizon: args.horizon,
        instruction: instruction.clone(),
        actions: actions.clone(),
    };

    let field_start = Instant::now();
    let field: ScalarField = emission_log_field(&model, &costmap, &instruction);
    let field_elapsed = field_start.elapsed();

    let plan_start = Instant::now();
    let mut provenance = Provenance {
        method: args.method,
        method_letter: args.method.letter(),
        seed: None,
        goal_candidates: None,
        candidate_costs: None,
        chosen_candidate: None,
        heuristic_capped: None,
        goal: None,
    };
    let trajectory: Trajectory = match args.method {
        Method::Viterbi => plan_on_field(&field, start, args.horizon, &actions)?,
        Method::Approx => {
            let outcome =
                approx_plan_with_field(&request, &model, &costmap, &field, args.candidates)?;
            provenance.goal_candidates = Some(outcome.candidates.clone());
            provenance.candidate_costs = Some(outcome.candidate_costs.clone());
            provenance.chosen_candidate = Some(outcome.chosen);
            provenance.heuristic_capped = Some(outcome.heuristic_capped);
            outcome.trajectory
        }
        Method::SpatialConcept => {
            let outcome = baseline_spatial_concept(&request, &model, &costmap, &field)?;
            provenance.goal = Some([outcome.goal_point.x, outcome.goal_point.y]);
            outcome.result.trajectory
        }
        Method::Database => {
            let training = args.train.as_ref().ok_or_else(|| {
                CliError::Validation("--train is required for the db method".into())
            })?;
            let training = load_training_file(training)?;
            provenance.seed = Some(args.seed);
            let outcome =
                baseline_database(&request, &training, &model, &costmap, &field, args.seed)?;
            provenance.goal = Some([outcome.goal_point.x, outcome.goal_point.y]);
            outcome.result.trajectory
        }
        Method::Random => {
            let training = args.train.as_ref().ok_or_else(|| {
                CliError::Validation("--train is required for the random method".into())
            })?;
            let training = load_training_file(training)?;
            provenance.seed = Some(args.seed);
            let outcome = baseline_random(&request, &training, &costmap, &field, args.seed)?;
            provenance.goal = Some([outcome.goal_point.x, outcome.goal_point.y]);
            outcome.result.trajectory
        }
    };
    let plan_elapsed = plan_start.elapsed();

    let score = score_trajectory(&trajectory, &model, &costmap, &instruction, args.horizon)?;
    let record = TrajectoryRecord::new(&trajectory, &costmap.geometry, &actions);
    let output = PlanOutput {
        method: args.method,
        horizon: args.horizon,
        instruction: args.say.say.clone(),
        trajectory: record,
        horizon_score: score.total,
        provenance,
    };
    let mut bytes = serde_json::to_vec_pretty(&output)?;
    bytes.push(b'\n');
    let path = write_file(&args.out, "trajectory.json", &bytes)?;

    if args.dump_field {
        let north_up = flip_rows(&field.values, field.width, field.height);
        write_file(
            &args.out,
            "field.csv",
            &field_to_csv(&north_up, field.width, field.height)?,
        )?;
        write_file(
            &args.out,
            "field.pgm",
            &field_to_pgm(&north_up, field.width, field.height)?,
        )?;
    }

    println!("method={}", args.method.cli_name());
    println!(
        "cumulative_log_likelihood={}",
        trajectory.cumulative_log_likelihood
    );
    println!("horizon_score={}", score.total);
    println!("path_length={}", output.trajectory.path_length);
    println!("steps={}", trajectory.actions.len());
    println!("trajectory={}", path.display());
    eprintln!(
        "timing: field {:.3} s, planning {:.3} s",
        field_elapsed.as_secs_f64(),
        plan_elapsed.as_secs_f64()
    );
    Ok(())
}
