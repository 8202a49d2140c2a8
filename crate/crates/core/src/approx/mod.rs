//! Approximate and baseline planners.
//!
//! Where the exact planner optimizes over whole trajectories, these
//! methods first commit to a goal cell and then run A* to it:
//!
//! * [`approx_plan`] — rank the model's position-distribution means by the
//!   emission field, A* to each of the top `J` under negative-log-emission
//!   step costs, keep the cheapest path,
//! * [`baseline_spatial_concept`] — classic goal-point extraction: argmax
//!   of the model's position score over the means, unit-cost A*,
//! * [`baseline_database`] — goal sampled from training records containing
//!   an instruction word,
//! * [`baseline_random`] — goal sampled uniformly from all training
//!   records (chance level).

mod astar;
mod baselines;
mod goals;

pub use astar::{astar_plan, AStarResult};
pub use baselines::{baseline_database, baseline_random, baseline_spatial_concept};
pub use goals::{approx_plan, approx_plan_with_field, goal_candidates, ApproxOutcome};

use serde::{Deserialize, Serialize};

use crate::grid::CellIndex;

/// A candidate goal cell with its ranking score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalCandidate {
    pub cell: CellIndex,
    /// Emission-field value at the cell.
    pub score: f64,
    /// Index of the position distribution the candidate came from.
    pub position_index: usize,
    /// True when the mean's cell was blocked and the candidate was moved
    /// to the nearest traversable cell.
    pub relocated: bool,
}

/// Step-cost model for A*.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostModel {
    /// Entering a cell costs `max_finite_field - field(cell)`; the shift
    /// keeps costs non-negative. Used by the approximate planner.
    NegLogEmission,
    /// Entering a cell costs `1 + penalty * (1 - costmap(cell))`. Used by
    /// the goal-point baselines.
    UnitPlusCostmap,
}

/// Heuristic for A*.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heuristic {
    /// `ln|A|` per Manhattan step, capped at the minimum step cost so it
    /// stays admissible; the cap engaging is recorded on the result.
    ScaledManhattan,
    /// Plain Manhattan distance (unit scale).
    Manhattan,
}

/// A* configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AStarConfig {
    pub cost_model: CostModel,
    pub heuristic: Heuristic,
    /// Weight of the `(1 - costmap)` term under
    /// [`CostModel::UnitPlusCostmap`].
    pub costmap_penalty: f64,
}

impl AStarConfig {
    /// The approximate planner's configuration.
    pub fn emission_cost() -> Self {
        Self {
            cost_model: CostModel::NegLogEmission,
            heuristic: Heuristic::ScaledManhattan,
            costmap_penalty: 0.0,
        }
    }

    /// The baselines' configuration.
    pub fn unit_cost() -> Self {
        Self {
            cost_model: CostModel::UnitPlusCostmap,
            heuristic: Heuristic::Manhattan,
            costmap_penalty: 1.0,
        }
    }
}
