//! Exhaustive enumeration oracle for the dynamic-programming planner.
//!
//! Walks every action sequence of the requested horizon in lexicographic
//! order under the declared action order, pruning prefixes that leave the
//! grid or enter blocked cells, and keeps the first sequence attaining the
//! maximum score. Guarded by a hard budget on `|A|^T`.

use super::{ActionSet, PlanError, PlanRequest, Trajectory};
use crate::concept::{emission_log_field, ScalarField, SpatialConceptModel};
use crate::costmap::CostMap;
use crate::grid::CellIndex;

/// Maximum number of action sequences the oracle will enumerate.
pub const BRUTE_FORCE_BUDGET: u64 = 10_000_000;

/// Enumerate all trajectories for a request and return the best.
pub fn brute_force_plan(
    request: &PlanRequest,
    model: &SpatialConceptModel,
    costmap: &CostMap,
) -> Result<Trajectory, PlanError> {
    let field = emission_log_field(model, costmap, &request.instruction);
    brute_force_on_field(&field, request.start, request.horizon, &request.actions)
}

struct Search<'a> {
    field: &'a ScalarField,
    moves: &'a [super::Move],
    horizon: usize,
    path: Vec<usize>,
    best_score: f64,
    best_path: Option<Vec<usize>>,
}

impl Search<'_> {
    fn dfs(&mut self, cell: CellIndex, depth: usize, score: f64) {
        if depth == self.horizon {
            // strict improvement keeps the first (lexicographically
            // smallest) maximizer
            if self.best_path.is_none() || score > self.best_score {
                self.best_score = score;
                self.best_path = Some(self.path.clone());
            }
            return;
        }
        for (a, m) in self.moves.iter().enumerate() {
            let col = cell.col as i64 + m.dc as i64;
            let row = cell.row as i64 + m.dr as i64;
            if col < 0
                || row < 0
                || col as usize >= self.field.width
                || row as usize >= self.field.height
            {
                continue;
            }
            let next = CellIndex::new(col as usize, row as usize);
            let v = self.field.value(next);
            if !v.is_finite() {
                continue;
            }
            self.path.push(a);
            self.dfs(next, depth + 1, score + v);
            self.path.pop();
        }
    }
}

/// Enumerate on a precomputed field.
pub fn brute_force_on_field(
    field: &ScalarField,
    start: CellIndex,
    horizon: usize,
    actions: &ActionSet,
) -> Result<Trajectory, PlanError> {
    if horizon == 0 {
        return Err(PlanError::ZeroHorizon);
    }
    if start.col >= field.width || start.row >= field.height {
        return Err(PlanError::StartOutOfBounds(start.col, start.row));
    }
    if !field.value(start).is_finite() {
        return Err(PlanError::StartBlocked(start.col, start.row));
    }
    let sequences = (actions.len() as u64).checked_pow(horizon as u32);
    if sequences.is_none() || sequences.unwrap() > BRUTE_FORCE_BUDGET {
        return Err(PlanError::BudgetExceeded {
            actions: actions.len(),
            horizon,
            budget: BRUTE_FORCE_BUDGET,
        });
    }

    let mut search = Search {
        field,
        moves: actions.moves(),
        horizon,
        path: Vec::with_capacity(horizon),
        best_score: f64::NEG_INFINITY,
        best_path: None,
    };
    search.dfs(start, 0, 0.0);

    let path = search.best_path.ok_or(PlanError::Infeasible)?;
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(start);
    let mut cell = start;
    for &a in &path {
        let m = actions.moves()[a];
        cell = CellIndex::new(
            (cell.col as i64 + m.dc as i64) as usize,
            (cell.row as i64 + m.dr as i64) as usize,
        );
        states.push(cell);
    }
    Ok(Trajectory::from_states(states, path, field))
}
