//! Exact planning by dynamic programming over suffix values.
//!
//! The program computes, backward from the horizon, the best achievable
//! remaining score `V_t(x)` for every cell, recording at each `(t, x)` the
//! first move (in declared action order) that attains it. Following those
//! recorded moves forward from the start yields the optimal trajectory
//! whose action sequence is lexicographically smallest among all optima —
//! the same tie-break the enumeration oracle applies — so the two agree
//! exactly, ties included.
//!
//! Memory: two rolling f64 layers plus one byte per cell per step for the
//! recorded moves; the byte array dominates for long horizons.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{ActionSet, Move, PlanError, PlanRequest, Trajectory};
use crate::concept::{
    emission_log_field, emission_log_field_seq, ScalarField, SpatialConceptModel,
};
use crate::costmap::CostMap;
use crate::grid::CellIndex;

/// Plan the optimal horizon-length trajectory for a request.
///
/// The emission field is computed once and reused at every step: the
/// instruction is treated as repeating over the whole horizon.
pub fn viterbi_plan(
    request: &PlanRequest,
    model: &SpatialConceptModel,
    costmap: &CostMap,
) -> Result<Trajectory, PlanError> {
    let field = emission_log_field(model, costmap, &request.instruction);
    plan_on_field(&field, request.start, request.horizon, &request.actions)
}

/// Fully sequential variant of [`viterbi_plan`].
pub fn viterbi_plan_seq(
    request: &PlanRequest,
    model: &SpatialConceptModel,
    costmap: &CostMap,
) -> Result<Trajectory, PlanError> {
    let field = emission_log_field_seq(model, costmap, &request.instruction);
    plan_on_field_seq(&field, request.start, request.horizon, &request.actions)
}

/// One cell's update: the best continuation value and the first move
/// attaining it.
#[inline]
fn best_move(
    field: &ScalarField,
    next_layer: &[f64],
    moves: &[Move],
    width: usize,
    height: usize,
    index: usize,
) -> (f64, u8) {
    let col = (index % width) as i64;
    let row = (index / width) as i64;
    let mut best = f64::NEG_INFINITY;
    let mut best_move = 0u8;
    for (a, m) in moves.iter().enumerate() {
        let nc = col + m.dc as i64;
        let nr = row + m.dr as i64;
        if nc < 0 || nr < 0 || nc as usize >= width || nr as usize >= height {
            continue;
        }
        let ni = nr as usize * width + nc as usize;
        let candidate = field.values[ni] + next_layer[ni];
        if candidate > best {
            best = candidate;
            best_move = a as u8;
        }
    }
    (best, best_move)
}

/// Plan on a precomputed per-cell field.
pub fn plan_on_field(
    field: &ScalarField,
    start: CellIndex,
    horizon: usize,
    actions: &ActionSet,
) -> Result<Trajectory, PlanError> {
    #[cfg(feature = "parallel")]
    return plan_impl(field, start, horizon, actions, true);
    #[cfg(not(feature = "parallel"))]
    plan_impl(field, start, horizon, actions, false)
}

/// Sequential variant of [`plan_on_field`]; the cell sweep order never
/// affects the result, so the two are bitwise interchangeable.
pub fn plan_on_field_seq(
    field: &ScalarField,
    start: CellIndex,
    horizon: usize,
    actions: &ActionSet,
) -> Result<Trajectory, PlanError> {
    plan_impl(field, start, horizon, actions, false)
}

fn plan_impl(
    field: &ScalarField,
    start: CellIndex,
    horizon: usize,
    actions: &ActionSet,
    parallel: bool,
) -> Result<Trajectory, PlanError> {
    if horizon == 0 {
        return Err(PlanError::ZeroHorizon);
    }
    let width = field.width;
    let height = field.height;
    let n = width * height;
    if start.col >= width || start.row >= height {
        return Err(PlanError::StartOutOfBounds(start.col, start.row));
    }
    let start_index = start.row * width + start.col;
    if !field.values[start_index].is_finite() {
        return Err(PlanError::StartBlocked(start.col, start.row));
    }

    let moves = actions.moves();
    // suffix value after the last step is zero everywhere reachable
    let mut next_layer: Vec<f64> = field
        .values
        .iter()
        .map(|v| {
            if v.is_finite() {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut cur_layer = vec![f64::NEG_INFINITY; n];
    let mut chosen = vec![0u8; horizon * n];

    for t in (0..horizon).rev() {
        let choice_row = &mut chosen[t * n..(t + 1) * n];
        let update = |index: usize, value: &mut f64, choice: &mut u8| {
            if !field.values[index].is_finite() {
                *value = f64::NEG_INFINITY;
                *choice = 0;
                return;
            }
            let (v, m) = best_move(field, &next_layer, moves, width, height, index);
            *value = v;
            *choice = m;
        };

        #[cfg(feature = "parallel")]
        if parallel {
            cur_layer
                .par_iter_mut()
                .zip(choice_row.par_iter_mut())
                .enumerate()
                .for_each(|(index, (value, choice))| update(index, value, choice));
        } else {
            for (index, (value, choice)) in
                cur_layer.iter_mut().zip(choice_row.iter_mut()).enumerate()
            {
                update(index, value, choice);
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = parallel;
            for (index, (value, choice)) in
                cur_layer.iter_mut().zip(choice_row.iter_mut()).enumerate()
            {
                update(index, value, choice);
            }
        }

        std::mem::swap(&mut cur_layer, &mut next_layer);
    }

    // after the loop the values for t = 0 live in next_layer
    if !next_layer[start_index].is_finite() {
        return Err(PlanError::Infeasible);
    }

    let mut states = Vec::with_capacity(horizon + 1);
    let mut taken = Vec::with_capacity(horizon);
    states.push(start);
    let mut cell = start;
    for t in 0..horizon {
        let index = cell.row * width + cell.col;
        let a = chosen[t * n + index] as usize;
        let m = moves[a];
        cell = CellIndex::new(
            (cell.col as i64 + m.dc as i64) as usize,
            (cell.row as i64 + m.dr as i64) as usize,
        );
        debug_assert!(field.values[cell.row * width + cell.col].is_finite());
        taken.push(a);
        states.push(cell);
    }

    Ok(Trajectory::from_states(states, taken, field))
}
