//! Trajectory planning on occupancy-grid maps from word-level place
//! instructions.
//!
//! The library is organized around a learned place model: a mixture of
//! place categories, each tying a word distribution to a set of 2D
//! Gaussian position distributions. Given a bag of instruction words,
//! the model and a probabilistic cost map yield a per-cell log-likelihood
//! field, and planners search for trajectories that accumulate as much of
//! that likelihood as possible over a fixed horizon:
//!
//! * [`grid`] — occupancy-grid maps (PGM + key/value metadata) and
//!   world/grid georeferencing,
//! * [`costmap`] — traversability probabilities from an exact Euclidean
//!   distance transform with linear obstacle inflation,
//! * [`concept`] — the place model, its fitters (closed-form posterior
//!   means and Gibbs sampling) and the emission/reward field,
//! * [`planner`] — exact horizon-length planning by dynamic programming,
//!   plus the exhaustive enumeration oracle used to verify it,
//! * [`approx`] — A*-based approximate planning to sampled goal
//!   candidates and the goal-point baseline methods,
//! * [`eval`] — synthetic environment generation, trial execution and
//!   success-rate metrics,
//! * [`oracle`] — the randomized planner-vs-enumeration verification
//!   battery.
//!
//! With the default `parallel` feature the per-cell kernels (field
//! evaluation, distance transform, dynamic-programming sweeps) run on
//! rayon; disabling it leaves a purely sequential build with bit-identical
//! outputs.

pub mod approx;
pub mod concept;
pub mod costmap;
pub mod eval;
pub mod export;
pub mod grid;
pub mod math;
pub mod oracle;
pub mod planner;

pub use concept::{
    Hyperparameters, Instruction, PositionDistribution, SpatialConcept, SpatialConceptModel,
    TrainingSet, Vocabulary,
};
pub use costmap::CostMap;
pub use grid::{CellIndex, CellState, GridGeometry, OccupancyGrid, Point2};
pub use planner::{ActionSet, PlanRequest, Trajectory};
