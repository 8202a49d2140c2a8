//! Exact horizon-length trajectory planning.
//!
//! The planner maximizes the sum of per-step field values over all action
//! sequences of the requested horizon, starting from a given cell, under
//! a one-cell-per-step move set. [`viterbi.rs`](self) holds the dynamic
//! program, [`brute_force_plan`] the exhaustive enumeration oracle that
//! verifies it.

mod brute;
mod viterbi;

pub use brute::{brute_force_on_field, brute_force_plan, BRUTE_FORCE_BUDGET};
pub use viterbi::{plan_on_field, plan_on_field_seq, viterbi_plan, viterbi_plan_seq};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept::{emission_log_at, Instruction, ScalarField, SpatialConceptModel};
use crate::costmap::CostMap;
use crate::grid::{CellIndex, GridGeometry, Point2};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("start cell ({0}, {1}) is not traversable")]
    StartBlocked(usize, usize),

    #[error("start cell ({0}, {1}) is outside the map")]
    StartOutOfBounds(usize, usize),

    #[error("no trajectory of the requested horizon has finite likelihood")]
    Infeasible,

    #[error("horizon must be at least 1")]
    ZeroHorizon,

    #[error("enumeration budget exceeded: |A|^T = {actions}^{horizon} > {budget} sequences")]
    BudgetExceeded {
        actions: usize,
        horizon: usize,
        budget: u64,
    },

    #[error(
        "goal cell ({col}, {row}) is not reachable from start ({start_col}, {start_row}): \
             the free-space components are disconnected"
    )]
    NoPath {
        start_col: usize,
        start_row: usize,
        col: usize,
        row: usize,
    },

    #[error("goal is not traversable: {0}")]
    GoalInfeasible(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("no matching training record for the instruction")]
    NoMatchingRecord,
}

/// A single one-cell move, in (column, row) deltas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub dc: i32,
    pub dr: i32,
}

impl Move {
    pub fn is_stay(&self) -> bool {
        self.dc == 0 && self.dr == 0
    }
}

/// Ordered move set. The declared order is the tie-break order: when two
/// action sequences score identically, planners return the sequence that
/// is lexicographically smallest under this order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSet {
    moves: Vec<Move>,
    pub include_stay: bool,
    pub include_diagonals: bool,
}

impl ActionSet {
    /// Canonical order: stay (when included), up, down, left, right, then
    /// the four diagonals. "Up" is +row, i.e. north in world coordinates.
    pub fn new(include_diagonals: bool, include_stay: bool) -> Self {
        let mut moves = Vec::new();
        if include_stay {
            moves.push(Move { dc: 0, dr: 0 });
        }
        moves.push(Move { dc: 0, dr: 1 });
        moves.push(Move { dc: 0, dr: -1 });
        moves.push(Move { dc: -1, dr: 0 });
        moves.push(Move { dc: 1, dr: 0 });
        if include_diagonals {
            moves.push(Move { dc: -1, dr: 1 });
            moves.push(Move { dc: 1, dr: 1 });
            moves.push(Move { dc: -1, dr: -1 });
            moves.push(Move { dc: 1, dr: -1 });
        }
        Self {
            moves,
            include_stay,
            include_diagonals,
        }
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Destination of applying move `m` at `cell`, when inside the grid.
    pub fn apply(geometry: &GridGeometry, cell: CellIndex, m: Move) -> Option<CellIndex> {
        let col = cell.col as i64 + m.dc as i64;
        let row = cell.row as i64 + m.dr as i64;
        if col < 0 || row < 0 || col as usize >= geometry.width || row as usize >= geometry.height {
            return None;
        }
        Some(CellIndex::new(col as usize, row as usize))
    }

    /// Index of the move with the given deltas.
    pub fn index_of(&self, dc: i32, dr: i32) -> Option<usize> {
        self.moves.iter().position(|m| m.dc == dc && m.dr == dr)
    }
}

impl Default for ActionSet {
    fn default() -> Self {
        Self::new(false, true)
    }
}

/// What to plan: where from, for how long, and toward which words.
#[derive(Clone, Debug)]
pub struct PlanRequest {
    pub start: CellIndex,
    pub horizon: usize,
    pub instruction: Instruction,
    pub actions: ActionSet,
}

/// A planned state/action sequence with its per-step field values.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// Visited cells including the start; length = actions + 1.
    pub states: Vec<CellIndex>,
    /// Indices into the action set.
    pub actions: Vec<usize>,
    /// Field value of each visited state after the start.
    pub step_log_likelihoods: Vec<f64>,
    /// Sum of the step values, accumulated in time order.
    pub cumulative_log_likelihood: f64,
}

impl Trajectory {
    /// Assemble from states, reading step values off the field.
    pub fn from_states(states: Vec<CellIndex>, actions: Vec<usize>, field: &ScalarField) -> Self {
        let step_log_likelihoods: Vec<f64> = states[1..].iter().map(|&c| field.value(c)).collect();
        let cumulative_log_likelihood = step_log_likelihoods.iter().sum();
        Self {
            states,
            actions,
            step_log_likelihoods,
            cumulative_log_likelihood,
        }
    }

    pub fn final_state(&self) -> CellIndex {
        *self
            .states
            .last()
            .expect("trajectory has at least the start")
    }

    /// Number of non-stay moves.
    pub fn path_length(&self, action_set: &ActionSet) -> usize {
        self.actions
            .iter()
            .filter(|&&a| !action_set.moves()[a].is_stay())
            .count()
    }

    /// Structural checks: state/action lengths agree, consecutive states
    /// differ by the applied move, every visited state has finite field
    /// value, and the cumulative matches the step sum.
    pub fn validate(&self, action_set: &ActionSet, field: &ScalarField) -> Result<(), PlanError> {
        if self.states.len() != self.actions.len() + 1 {
            return Err(PlanError::InvalidTrajectory(format!(
                "{} states vs {} actions",
                self.states.len(),
                self.actions.len()
            )));
        }
        for (t, &a) in self.actions.iter().enumerate() {
            let m = *action_set.moves().get(a).ok_or_else(|| {
                PlanError::InvalidTrajectory(format!("action index {a} out of range"))
            })?;
            let from = self.states[t];
            let to = self.states[t + 1];
            let dc = to.col as i64 - from.col as i64;
            let dr = to.row as i64 - from.row as i64;
            if dc != m.dc as i64 || dr != m.dr as i64 {
                return Err(PlanError::InvalidTrajectory(format!(
                    "step {t}: states differ by ({dc}, {dr}) but action is ({}, {})",
                    m.dc, m.dr
                )));
            }
        }
        for (t, &c) in self.states.iter().enumerate().skip(1) {
            if !field.value(c).is_finite() {
                return Err(PlanError::InvalidTrajectory(format!(
                    "step {t} visits blocked cell ({}, {})",
                    c.col, c.row
                )));
            }
        }
        let total: f64 = self.step_log_likelihoods.iter().sum();
        if (total - self.cumulative_log_likelihood).abs() > 1e-9 {
            return Err(PlanError::InvalidTrajectory(format!(
                "cumulative {} does not match step sum {}",
                self.cumulative_log_likelihood, total
            )));
        }
        Ok(())
    }
}

/// Per-step and total score of a trajectory padded out to `horizon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryScore {
    /// One value per step 1..=horizon; stays repeat the final state value.
    pub per_step: Vec<f64>,
    pub total: f64,
}

/// Re-score a trajectory under a model: per-step emission values, with the
/// final state's value repeated when the trajectory is shorter than the
/// horizon (the robot is assumed to stay put once arrived).
pub fn score_trajectory(
    trajectory: &Trajectory,
    model: &SpatialConceptModel,
    costmap: &CostMap,
    instruction: &Instruction,
    horizon: usize,
) -> Result<TrajectoryScore, PlanError> {
    if trajectory.states.len() > horizon + 1 {
        return Err(PlanError::InvalidTrajectory(format!(
            "trajectory has {} steps but the horizon is {horizon}",
            trajectory.states.len() - 1
        )));
    }
    let mut per_step = Vec::with_capacity(horizon);
    for (t, &c) in trajectory.states.iter().enumerate().skip(1) {
        if !costmap.geometry.contains(c) {
            return Err(PlanError::InvalidTrajectory(format!(
                "step {t} leaves the grid at ({}, {})",
                c.col, c.row
            )));
        }
        let v = emission_log_at(model, costmap, instruction, c);
        if !v.is_finite() {
            return Err(PlanError::InvalidTrajectory(format!(
                "step {t} enters a zero-likelihood cell ({}, {})",
                c.col, c.row
            )));
        }
        per_step.push(v);
    }
    // pad with the final state's value (which is the start's value for an
    // empty action sequence)
    let final_cell = trajectory.final_state();
    if !costmap.geometry.contains(final_cell) {
        return Err(PlanError::InvalidTrajectory(
            "final state leaves the grid".into(),
        ));
    }
    let final_value = emission_log_at(model, costmap, instruction, final_cell);
    if !final_value.is_finite() {
        return Err(PlanError::InvalidTrajectory(
            "final state is on a zero-likelihood cell".into(),
        ));
    }
    while per_step.len() < horizon {
        per_step.push(final_value);
    }
    let total = per_step.iter().sum();
    Ok(TrajectoryScore { per_step, total })
}

/// JSON-facing trajectory record with grid and world coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub states: Vec<TrajectoryState>,
    pub actions: Vec<usize>,
    pub action_moves: Vec<Move>,
    pub step_log_likelihoods: Vec<f64>,
    pub cumulative_log_likelihood: f64,
    pub path_length: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub col: usize,
    pub row: usize,
    pub x: f64,
    pub y: f64,
}

impl TrajectoryRecord {
    pub fn new(trajectory: &Trajectory, geometry: &GridGeometry, actions: &ActionSet) -> Self {
        let states = trajectory
            .states
            .iter()
            .map(|&c| {
                let Point2 { x, y } = geometry.cell_center(c);
                TrajectoryState {
                    col: c.col,
                    row: c.row,
                    x,
                    y,
                }
            })
            .collect();
        Self {
            states,
            actions: trajectory.actions.clone(),
            action_moves: trajectory
                .actions
                .iter()
                .map(|&a| actions.moves()[a])
                .collect(),
            step_log_likelihoods: trajectory.step_log_likelihoods.clone(),
            cumulative_log_likelihood: trajectory.cumulative_log_likelihood,
            path_length: trajectory.path_length(actions),
        }
    }
}
