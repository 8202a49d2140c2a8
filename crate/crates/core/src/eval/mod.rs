//! Synthetic environments, trial execution and success-rate metrics.

mod envgen;
mod run;
mod scenario;

pub use envgen::{generate_environment, EnvironmentSpec, RoomSpec};
pub use run::{
    aggregate, loglik_series, metrics_csv, metrics_table, run_scenario, MethodRun, MetricsRow,
    TrialResult,
};
pub use scenario::{build_trial, run_trials, FitSpec, ScenarioFile};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept::{
    FitError, Instruction, InstructionError, ModelError, SpatialConceptModel, TrainingSet,
};
use crate::costmap::{CostMap, CostmapError};
use crate::grid::{CellIndex, MapError, OccupancyGrid, Point2};
use crate::planner::ActionSet;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("rooms {0} and {1} overlap")]
    RoomsOverlap(usize, usize),

    #[error("room {index} does not fit inside the map walls")]
    RoomOutOfBounds { index: usize },

    #[error("room {index}: no space for a {door_cells}-cell door on the {side} side")]
    DoorImpossible {
        index: usize,
        door_cells: usize,
        side: &'static str,
    },

    #[error("environment has no room")]
    NoRooms,

    #[error("scenario: {0}")]
    BadScenario(String),

    #[error("no eligible start cell")]
    NoStartCell,

    #[error(transparent)]
    Map(#[from] MapError),

    #[error(transparent)]
    Costmap(#[from] CostmapError),

    #[error(transparent)]
    Fit(#[from] FitError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Instruction(#[from] InstructionError),
}

/// Axis-aligned world-coordinate rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }
}

/// A named ground-truth area for success evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaceRegion {
    pub name: String,
    pub rect: Rect,
    /// Representative point, inside the rect.
    pub anchor: Point2,
}

/// Planner identifiers, in the conventional comparison order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// (A) exact dynamic-programming planner.
    Viterbi,
    /// (B) A* to ranked goal candidates under emission costs.
    #[serde(rename = "astar")]
    Approx,
    /// (C) goal-point baseline from the place model.
    #[serde(rename = "sc")]
    SpatialConcept,
    /// (D) goal sampled from matching training records.
    #[serde(rename = "db")]
    Database,
    /// (E) goal sampled from all training records.
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Viterbi,
        Method::Approx,
        Method::SpatialConcept,
        Method::Database,
        Method::Random,
    ];

    pub fn letter(&self) -> char {
        match self {
            Method::Viterbi => 'A',
            Method::Approx => 'B',
            Method::SpatialConcept => 'C',
            Method::Database => 'D',
            Method::Random => 'E',
        }
    }

    pub fn cli_name(&self) -> &'static str {
        match self {
            Method::Viterbi => "viterbi",
            Method::Approx => "astar",
            Method::SpatialConcept => "sc",
            Method::Database => "db",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.letter(), self.cli_name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "viterbi" | "a" | "A" => Ok(Method::Viterbi),
            "astar" | "b" | "B" => Ok(Method::Approx),
            "sc" | "c" | "C" => Ok(Method::SpatialConcept),
            "db" | "d" | "D" => Ok(Method::Database),
            "random" | "e" | "E" => Ok(Method::Random),
            other => Err(format!(
                "unknown method {other:?} (expected viterbi, astar, sc, db or random)"
            )),
        }
    }
}

/// A single fully-specified trial.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: OccupancyGrid,
    pub costmap: CostMap,
    pub model: SpatialConceptModel,
    pub training: TrainingSet,
    pub regions: Vec<PlaceRegion>,
    pub start: CellIndex,
    pub instruction: Instruction,
    pub horizon: usize,
    pub methods: Vec<Method>,
    /// Goal-candidate count for the approximate planner.
    pub candidates: usize,
    pub actions: ActionSet,
    pub seed: u64,
}
