//! Goal-point baseline planners.
//!
//! All three pick a single goal first and then run unit-cost A* with the
//! cost-map penalty. Goal selection never consults traversability, so a
//! goal can land on a blocked cell; that surfaces as
//! [`PlanError::GoalInfeasible`] and is counted as a navigation failure
//! by the evaluation harness rather than silently relocated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{astar_plan, AStarConfig, AStarResult};
use crate::concept::{model_position_score, ScalarField, SpatialConceptModel, TrainingSet};
use crate::costmap::CostMap;
use crate::grid::{CellIndex, Point2};
use crate::planner::{PlanError, PlanRequest};

/// A baseline plan: the A* result plus the goal it committed to.
#[derive(Clone, Debug)]
pub struct BaselineOutcome {
    pub result: AStarResult,
    pub goal: CellIndex,
    /// World position the goal was derived from.
    pub goal_point: Point2,
}

fn goal_cell(costmap: &CostMap, point: Point2, what: &str) -> Result<CellIndex, PlanError> {
    let cell = costmap.geometry.world_to_cell(point).ok_or_else(|| {
        PlanError::GoalInfeasible(format!(
            "{what} ({:.3}, {:.3}) is outside the map",
            point.x, point.y
        ))
    })?;
    if !costmap.is_traversable(cell) {
        return Err(PlanError::GoalInfeasible(format!(
            "{what} ({:.3}, {:.3}) falls on a blocked cell ({}, {})",
            point.x, point.y, cell.col, cell.row
        )));
    }
    Ok(cell)
}

/// Classic spatial-concept goal extraction: evaluate the model's position
/// score at every position-distribution mean (no cost-map factor, exactly
/// as a place-recognition pipeline would), take the argmax, and A* to it
/// with unit step costs.
pub fn baseline_spatial_concept(
    request: &PlanRequest,
    model: &SpatialConceptModel,
    costmap: &CostMap,
    field: &ScalarField,
) -> Result<BaselineOutcome, PlanError> {
    let best = model
        .positions
        .iter()
        .enumerate()
        .map(|(k, pd)| {
            (
                k,
                model_position_score(model, &request.instruction, pd.mean),
            )
        })
        .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
        .ok_or(PlanError::Infeasible)?;
    let point = model.positions[best.0].mean;
    let goal = goal_cell(costmap, point, "most likely position mean")?;
    let result = astar_plan(
        request.start,
        goal,
        costmap,
        field,
        &AStarConfig::unit_cost(),
        &request.actions,
    )?;
    Ok(BaselineOutcome {
        result,
        goal,
        goal_point: point,
    })
}

/// Goal sampled uniformly among training records that mention any
/// instruction word.
pub fn baseline_database(
    request: &PlanRequest,
    training: &TrainingSet,
    model: &SpatialConceptModel,
    costmap: &CostMap,
    field: &ScalarField,
    seed: u64,
) -> Result<BaselineOutcome, PlanError> {
    let words: Vec<&str> = request
        .instruction
        .present_words()
        .map(|i| model.vocabulary.word(i))
        .collect();
    let matches: Vec<usize> = training
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.words.iter().any(|w| words.contains(&w.as_str())))
        .map(|(i, _)| i)
        .collect();
    if matches.is_empty() {
        return Err(PlanError::NoMatchingRecord);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let record = &training.records[matches[rng.gen_range(0..matches.len())]];
    plan_to_record(request, record.position, costmap, field)
}

/// Goal sampled uniformly from all training records, words ignored.
pub fn baseline_random(
    request: &PlanRequest,
    training: &TrainingSet,
    costmap: &CostMap,
    field: &ScalarField,
    seed: u64,
) -> Result<BaselineOutcome, PlanError> {
    if training.is_empty() {
        return Err(PlanError::NoMatchingRecord);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let record = &training.records[rng.gen_range(0..training.len())];
    plan_to_record(request, record.position, costmap, field)
}

fn plan_to_record(
    request: &PlanRequest,
    point: Point2,
    costmap: &CostMap,
    field: &ScalarField,
) -> Result<BaselineOutcome, PlanError> {
    let goal = goal_cell(costmap, point, "sampled training position")?;
    let result = astar_plan(
        request.start,
        goal,
        costmap,
        field,
        &AStarConfig::unit_cost(),
        &request.actions,
    )?;
    Ok(BaselineOutcome {
        result,
        goal,
        goal_point: point,
    })
}
