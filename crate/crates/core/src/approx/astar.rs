//! Grid A* under the two step-cost models.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{AStarConfig, CostModel, Heuristic};
use crate::concept::ScalarField;
use crate::costmap::CostMap;
use crate::grid::CellIndex;
use crate::planner::{ActionSet, PlanError, Trajectory};

/// An A* solution: the path as a trajectory plus search metadata.
#[derive(Clone, Debug)]
pub struct AStarResult {
    pub trajectory: Trajectory,
    /// Cumulative step cost of the path under the configured cost model.
    pub path_cost: f64,
    /// True when the admissibility cap reduced the heuristic scale.
    pub heuristic_capped: bool,
}

#[derive(PartialEq)]
struct OpenEntry {
    f: f64,
    g: f64,
    index: usize,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the smallest f pops first.
        // Ties: smaller g, then row-major cell order.
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.g.total_cmp(&self.g))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* from `start` to `goal`.
///
/// Step costs are incurred on entering a cell. Cells with zero
/// traversability (equivalently `-inf` field) cannot be entered. Stay
/// moves are skipped; actions on the returned trajectory are
/// reconstructed from consecutive cells.
pub fn astar_plan(
    start: CellIndex,
    goal: CellIndex,
    costmap: &CostMap,
    field: &ScalarField,
    config: &AStarConfig,
    actions: &ActionSet,
) -> Result<AStarResult, PlanError> {
    let geometry = &costmap.geometry;
    if !geometry.contains(start) {
        return Err(PlanError::StartOutOfBounds(start.col, start.row));
    }
    if !costmap.is_traversable(start) {
        return Err(PlanError::StartBlocked(start.col, start.row));
    }
    if !geometry.contains(goal) || !costmap.is_traversable(goal) {
        return Err(PlanError::GoalInfeasible(format!(
            "cell ({}, {})",
            goal.col, goal.row
        )));
    }

    // Entering-cost closure. For the emission model, shift by the field
    // maximum so every step cost is >= 0.
    let shift = match config.cost_model {
        CostModel::NegLogEmission => field.max_finite().ok_or(PlanError::Infeasible)?,
        CostModel::UnitPlusCostmap => 0.0,
    };
    let step_cost = |index: usize| -> Option<f64> {
        match config.cost_model {
            CostModel::NegLogEmission => {
                let v = field.values[index];
                v.is_finite().then_some(shift - v)
            }
            CostModel::UnitPlusCostmap => {
                let v = costmap.values()[index];
                (v > 0.0).then_some(1.0 + config.costmap_penalty * (1.0 - v))
            }
        }
    };

    // Heuristic scale: ln|A| per Manhattan step, capped at the minimum
    // step cost to stay admissible. Under the emission model the minimum
    // step cost is 0 by construction (the field-maximum cell), so the cap
    // always engages there.
    let (scale, heuristic_capped) = match config.heuristic {
        Heuristic::Manhattan => (1.0, false),
        Heuristic::ScaledManhattan => {
            let raw = (actions.len() as f64).ln();
            let min_step = (0..field.values.len())
                .filter_map(step_cost)
                .fold(f64::INFINITY, f64::min);
            if min_step < raw {
                (min_step, true)
            } else {
                (raw, false)
            }
        }
    };
    let manhattan = |index: usize| -> f64 {
        let c = geometry.cell_at(index);
        let dc = (c.col as i64 - goal.col as i64).abs();
        let dr = (c.row as i64 - goal.row as i64).abs();
        scale * (dc + dr) as f64
    };

    let n = geometry.n_cells();
    let start_index = geometry.index(start);
    let goal_index = geometry.index(goal);
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[start_index] = 0.0;
    open.push(OpenEntry {
        f: manhattan(start_index),
        g: 0.0,
        index: start_index,
    });

    let moves: Vec<_> = actions.moves().iter().filter(|m| !m.is_stay()).collect();
    while let Some(entry) = open.pop() {
        if closed[entry.index] {
            continue;
        }
        closed[entry.index] = true;
        if entry.index == goal_index {
            break;
        }
        let cell = geometry.cell_at(entry.index);
        for m in &moves {
            let col = cell.col as i64 + m.dc as i64;
            let row = cell.row as i64 + m.dr as i64;
            if col < 0
                || row < 0
                || col as usize >= geometry.width
                || row as usize >= geometry.height
            {
                continue;
            }
            let ni = row as usize * geometry.width + col as usize;
            if closed[ni] {
                continue;
            }
            let Some(cost) = step_cost(ni) else { continue };
            let tentative = g[entry.index] + cost;
            if tentative < g[ni] {
                g[ni] = tentative;
                parent[ni] = entry.index;
                open.push(OpenEntry {
                    f: tentative + manhattan(ni),
                    g: tentative,
                    index: ni,
                });
            }
        }
    }

    if !closed[goal_index] {
        return Err(PlanError::NoPath {
            start_col: start.col,
            start_row: start.row,
            col: goal.col,
            row: goal.row,
        });
    }

    // reconstruct
    let mut cells = vec![goal_index];
    let mut cur = goal_index;
    while cur != start_index {
        cur = parent[cur];
        cells.push(cur);
    }
    cells.reverse();
    let states: Vec<CellIndex> = cells.iter().map(|&i| geometry.cell_at(i)).collect();
    let mut taken = Vec::with_capacity(states.len() - 1);
    for w in states.windows(2) {
        let dc = (w[1].col as i64 - w[0].col as i64) as i32;
        let dr = (w[1].row as i64 - w[0].row as i64) as i32;
        let a = actions
            .index_of(dc, dr)
            .expect("successive A* cells must differ by a declared move");
        taken.push(a);
    }

    Ok(AStarResult {
        trajectory: Trajectory::from_states(states, taken, field),
        path_cost: g[goal_index],
        heuristic_capped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridGeometry, Point2};

    fn open_map(w: usize, h: usize) -> CostMap {
        let geometry = GridGeometry::new(w, h, 1.0, Point2::new(0.0, 0.0)).unwrap();
        CostMap::from_values(geometry, vec![1.0; w * h])
    }

    fn uniform_field(costmap: &CostMap) -> ScalarField {
        ScalarField {
            width: costmap.geometry.width,
            height: costmap.geometry.height,
            values: costmap
                .values()
                .iter()
                .map(|&v| if v > 0.0 { -1.0 } else { f64::NEG_INFINITY })
                .collect(),
        }
    }

    /// Bellman-Ford style relaxation; the independent shortest-path oracle.
    fn exhaustive_shortest_cost(
        costmap: &CostMap,
        field: &ScalarField,
        config: &AStarConfig,
        actions: &ActionSet,
        start: CellIndex,
        goal: CellIndex,
    ) -> Option<f64> {
        let geometry = &costmap.geometry;
        let n = geometry.n_cells();
        let enter = |i: usize| -> Option<f64> {
            match config.cost_model {
                CostModel::NegLogEmission => {
                    let shift = field.max_finite().unwrap();
                    field.values[i].is_finite().then(|| shift - field.values[i])
                }
                CostModel::UnitPlusCostmap => {
                    let v = costmap.values()[i];
                    (v > 0.0).then_some(1.0 + config.costmap_penalty * (1.0 - v))
                }
            }
        };
        let mut dist = vec![f64::INFINITY; n];
        dist[geometry.index(start)] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for i in 0..n {
                if dist[i].is_infinite() {
                    continue;
                }
                let c = geometry.cell_at(i);
                for m in actions.moves().iter().filter(|m| !m.is_stay()) {
                    let col = c.col as i64 + m.dc as i64;
                    let row = c.row as i64 + m.dr as i64;
                    if col < 0
                        || row < 0
                        || col as usize >= geometry.width
                        || row as usize >= geometry.height
                    {
                        continue;
                    }
                    let ni = row as usize * geometry.width + col as usize;
                    if let Some(cost) = enter(ni) {
                        if dist[i] + cost < dist[ni] {
                            dist[ni] = dist[i] + cost;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let d = dist[geometry.index(goal)];
        d.is_finite().then_some(d)
    }

    #[test]
    fn straight_line_on_uniform_costs() {
        let cm = open_map(5, 5);
        let f = uniform_field(&cm);
        let result = astar_plan(
            CellIndex::new(0, 0),
            CellIndex::new(3, 0),
            &cm,
            &f,
            &AStarConfig::unit_cost(),
            &ActionSet::default(),
        )
        .unwrap();
        assert_eq!(result.trajectory.actions.len(), 3);
        assert!((result.path_cost - 3.0).abs() < 1e-12);
        // row-major tie-break keeps it on the bottom row
        assert!(result.trajectory.states.iter().all(|c| c.row == 0));
    }

    #[test]
    fn detours_around_a_low_likelihood_puddle() {
        // corridor with a puddle in the middle; verify against the
        // exhaustive relaxation oracle
        let cm = open_map(7, 3);
        let mut f = uniform_field(&cm);
        // puddle at (3, 1): heavily unlikely but traversable
        f.values[7 + 3] = -50.0;
        let config = AStarConfig::emission_cost();
        let actions = ActionSet::default();
        let start = CellIndex::new(0, 1);
        let goal = CellIndex::new(6, 1);
        let result = astar_plan(start, goal, &cm, &f, &config, &actions).unwrap();
        let oracle = exhaustive_shortest_cost(&cm, &f, &config, &actions, start, goal).unwrap();
        assert!((result.path_cost - oracle).abs() < 1e-9);
        assert!(
            !result.trajectory.states.contains(&CellIndex::new(3, 1)),
            "path should avoid the puddle"
        );
    }

    #[test]
    fn walled_off_goal_reports_no_path() {
        let geometry = GridGeometry::new(5, 1, 1.0, Point2::new(0.0, 0.0)).unwrap();
        let cm = CostMap::from_values(geometry, vec![1.0, 1.0, 0.0, 1.0, 1.0]);
        let f = uniform_field(&cm);
        let err = astar_plan(
            CellIndex::new(0, 0),
            CellIndex::new(4, 0),
            &cm,
            &f,
            &AStarConfig::unit_cost(),
            &ActionSet::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::NoPath { .. }));
        let err = astar_plan(
            CellIndex::new(0, 0),
            CellIndex::new(2, 0),
            &cm,
            &f,
            &AStarConfig::unit_cost(),
            &ActionSet::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::GoalInfeasible(_)));
    }

    #[test]
    fn goal_equals_start_yields_empty_path() {
        let cm = open_map(3, 3);
        let f = uniform_field(&cm);
        let result = astar_plan(
            CellIndex::new(1, 1),
            CellIndex::new(1, 1),
            &cm,
            &f,
            &AStarConfig::unit_cost(),
            &ActionSet::default(),
        )
        .unwrap();
        assert!(result.trajectory.actions.is_empty());
        assert_eq!(result.path_cost, 0.0);
    }

    #[test]
    fn capped_heuristic_matches_uniform_cost_search_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let actions = ActionSet::default();
        let config = AStarConfig::emission_cost();
        let mut checked = 0;
        while checked < 50 {
            let w = rng.gen_range(3..=8);
            let h = rng.gen_range(3..=8);
            let values: Vec<f64> = (0..w * h)
                .map(|_| if rng.gen_bool(0.2) { 0.0 } else { 1.0 })
                .collect();
            let geometry = GridGeometry::new(w, h, 1.0, Point2::new(0.0, 0.0)).unwrap();
            let cm = CostMap::from_values(geometry, values);
            let mut f = uniform_field(&cm);
            for v in f.values.iter_mut().filter(|v| v.is_finite()) {
                *v = rng.gen_range(-20.0..0.0);
            }
            let free: Vec<usize> = (0..cm.geometry.n_cells())
                .filter(|&i| cm.values()[i] > 0.0)
                .collect();
            if free.len() < 2 {
                continue;
            }
            let start = cm.geometry.cell_at(free[rng.gen_range(0..free.len())]);
            let goal = cm.geometry.cell_at(free[rng.gen_range(0..free.len())]);
            let result = astar_plan(start, goal, &cm, &f, &config, &actions);
            let oracle = exhaustive_shortest_cost(&cm, &f, &config, &actions, start, goal);
            match (result, oracle) {
                (Ok(r), Some(d)) => {
                    assert!((r.path_cost - d).abs() < 1e-9, "instance {checked}");
                    assert!(r.heuristic_capped);
                    checked += 1;
                }
                (Err(PlanError::NoPath { .. }), None) => {
                    checked += 1;
                }
                other => panic!("disagreement: {other:?}"),
            }
        }
    }
}
