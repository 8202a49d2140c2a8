//! Goal-candidate extraction and the candidate-set approximate planner.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{astar_plan, AStarConfig, AStarResult, GoalCandidate};
use crate::concept::{
    emission_log_at, emission_log_field, Instruction, ScalarField, SpatialConceptModel,
};
use crate::costmap::CostMap;
use crate::planner::{PlanError, PlanRequest, Trajectory};

/// Rank the model's position-distribution means as goal candidates.
///
/// Each mean is mapped to its containing cell and scored by the emission
/// field there. A mean whose cell is blocked (or outside the map) is
/// relocated to the traversable cell nearest to the mean (Euclidean to
/// cell centers, row-major on ties) and flagged. Candidates are returned
/// best-first, capped at `j`.
pub fn goal_candidates(
    model: &SpatialConceptModel,
    costmap: &CostMap,
    instruction: &Instruction,
    j: usize,
) -> Result<Vec<GoalCandidate>, PlanError> {
    let geometry = &costmap.geometry;
    let mut candidates = Vec::with_capacity(model.n_positions());
    for (position_index, pd) in model.positions.iter().enumerate() {
        let direct = geometry
            .world_to_cell(pd.mean)
            .filter(|&c| costmap.is_traversable(c));
        let (cell, relocated) = match direct {
            Some(c) => (c, false),
            None => {
                let mut best: Option<(f64, usize)> = None;
                for (i, &v) in costmap.values().iter().enumerate() {
                    if v <= 0.0 {
                        continue;
                    }
                    let d = geometry.cell_center(geometry.cell_at(i)).distance(pd.mean);
                    // strict < keeps the first (row-major) cell on ties
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, i));
                    }
                }
                let (_, i) = best.ok_or(PlanError::Infeasible)?;
                (geometry.cell_at(i), true)
            }
        };
        let score = emission_log_at(model, costmap, instruction, cell);
        candidates.push(GoalCandidate {
            cell,
            score,
            position_index,
            relocated,
        });
    }
    // best-first; ties keep the lower position index (stable sort)
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
    candidates.truncate(j.max(1).min(candidates.len()));
    Ok(candidates)
}

/// The approximate plan plus everything needed to audit it.
#[derive(Clone, Debug)]
pub struct ApproxOutcome {
    pub trajectory: Trajectory,
    pub candidates: Vec<GoalCandidate>,
    /// A* path cost per candidate, `None` where unreachable.
    pub candidate_costs: Vec<Option<f64>>,
    /// Index into `candidates` of the selected goal.
    pub chosen: usize,
    pub heuristic_capped: bool,
}

/// Plan by A* to the best-ranked goal candidates, keeping the
/// cheapest-path one.
pub fn approx_plan(
    request: &PlanRequest,
    model: &SpatialConceptModel,
    costmap: &CostMap,
    j: usize,
) -> Result<ApproxOutcome, PlanError> {
    let field = emission_log_field(model, costmap, &request.instruction);
    approx_plan_with_field(request, model, costmap, &field, j)
}

/// [`approx_plan`] with a precomputed emission field.
pub fn approx_plan_with_field(
    request: &PlanRequest,
    model: &SpatialConceptModel,
    costmap: &CostMap,
    field: &ScalarField,
    j: usize,
) -> Result<ApproxOutcome, PlanError> {
    if !costmap.geometry.contains(request.start) {
        return Err(PlanError::StartOutOfBounds(
            request.start.col,
            request.start.row,
        ));
    }
    if !costmap.is_traversable(request.start) {
        return Err(PlanError::StartBlocked(
            request.start.col,
            request.start.row,
        ));
    }
    let candidates = goal_candidates(model, costmap, &request.instruction, j)?;
    let config = AStarConfig::emission_cost();

    let search = |candidate: &GoalCandidate| -> Option<AStarResult> {
        astar_plan(
            request.start,
            candidate.cell,
            costmap,
            field,
            &config,
            &request.actions,
        )
        .ok()
    };

    #[cfg(feature = "parallel")]
    let results: Vec<Option<AStarResult>> = candidates.par_iter().map(search).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Option<AStarResult>> = candidates.iter().map(search).collect();

    let candidate_costs: Vec<Option<f64>> = results
        .iter()
        .map(|r| r.as_ref().map(|r| r.path_cost))
        .collect();

    // minimum path cost; ties keep the better-ranked candidate
    let mut chosen: Option<usize> = None;
    for (i, cost) in candidate_costs.iter().enumerate() {
        if let Some(c) = cost {
            if chosen.is_none_or(|b| *c < candidate_costs[b].unwrap()) {
                chosen = Some(i);
            }
        }
    }
    let chosen = chosen.ok_or_else(|| {
        PlanError::GoalInfeasible("no goal candidate is reachable from the start".into())
    })?;
    let result = results
        .into_iter()
        .nth(chosen)
        .flatten()
        .expect("chosen is Some");

    Ok(ApproxOutcome {
        trajectory: result.trajectory,
        candidates,
        candidate_costs,
        chosen,
        heuristic_capped: result.heuristic_capped,
    })
}
