//! Randomized verification battery: the dynamic-programming planner
//! against exhaustive enumeration on small instances.
//!
//! Instances draw a random model, map and request. Scores must agree to
//! within [`SCORE_TOLERANCE`]; trajectories must be identical, except
//! where several action sequences tie in score, in which case the
//! planner's trajectory must itself score within tolerance of the
//! enumeration optimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::concept::{
    emission_log_field, Instruction, PositionDistribution, SpatialConcept, SpatialConceptModel,
    Vocabulary,
};
use crate::costmap::{build_costmap, CostMap};
use crate::grid::{CellState, GridGeometry, OccupancyGrid, Point2};
use crate::planner::{brute_force_on_field, plan_on_field, ActionSet, PlanError, PlanRequest};

/// Maximum allowed score discrepancy between planner and enumeration.
pub const SCORE_TOLERANCE: f64 = 1e-9;

/// Battery settings.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OracleParams {
    pub instances: usize,
    /// Maximum grid side length.
    pub max_grid: usize,
    /// Maximum planning horizon.
    pub max_horizon: usize,
    pub seed: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            instances: 100,
            max_grid: 5,
            max_horizon: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("invalid battery: {0}")]
    BadParams(String),

    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Battery outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub instances: usize,
    /// Largest |planner − enumeration| score gap observed.
    pub max_score_gap: f64,
    /// Instances where trajectories differed but tied in score.
    pub tie_cases: usize,
    /// Instances where trajectories differed and did not tie: failures.
    pub mismatches: usize,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.max_score_gap <= SCORE_TOLERANCE
    }
}

/// One drawn instance.
pub struct OracleInstance {
    pub model: SpatialConceptModel,
    pub costmap: CostMap,
    pub request: PlanRequest,
}

fn random_multinomial(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Draw a random small instance; deterministic in `seed`.
pub fn random_instance(seed: u64, max_grid: usize, max_horizon: usize) -> OracleInstance {
    for attempt in 0..64 {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(attempt),
        );
        let width = rng.gen_range(2..=max_grid.max(2));
        let height = rng.gen_range(2..=max_grid.max(2));
        let geometry = GridGeometry::new(width, height, 1.0, Point2::new(0.0, 0.0)).unwrap();
        let mut grid = OccupancyGrid::filled(geometry.clone(), CellState::Free);
        for cell in geometry.cells() {
            if rng.gen_bool(0.25) {
                grid.set_state(cell, CellState::Occupied);
            }
        }
        let costmap = build_costmap(&grid, 0.0, 0.0).unwrap();
        let free = costmap.traversable_indices();
        if free.is_empty() {
            continue;
        }

        let vocab = Vocabulary::new(["a", "b", "c"]).unwrap();
        let n_concepts = rng.gen_range(1..=3);
        let n_positions = rng.gen_range(1..=3);
        let positions = (0..n_positions)
            .map(|_| {
                let mean = Point2::new(
                    rng.gen_range(0.0..width as f64),
                    rng.gen_range(0.0..height as f64),
                );
                let sx = rng.gen_range(0.3..3.0);
                let sy = rng.gen_range(0.3..3.0);
                PositionDistribution::new(mean, [[sx, 0.0], [0.0, sy]]).unwrap()
            })
            .collect();
        let concepts = (0..n_concepts)
            .map(|_| SpatialConcept {
                word_dist: random_multinomial(&mut rng, vocab.len()),
                position_dist: random_multinomial(&mut rng, n_positions),
            })
            .collect();
        let model = SpatialConceptModel {
            vocabulary: vocab,
            mixture: random_multinomial(&mut rng, n_concepts),
            concepts,
            positions,
        };

        let words: Vec<&str> = match rng.gen_range(0..3) {
            0 => vec!["a"],
            1 => vec!["b", "c"],
            _ => vec!["a", "a", "c"],
        };
        let (instruction, _) = Instruction::from_words(&model.vocabulary, &words).unwrap();
        let start = costmap.geometry.cell_at(free[rng.gen_range(0..free.len())]);
        let horizon = rng.gen_range(1..=max_horizon.max(1));
        return OracleInstance {
            model,
            costmap,
            request: PlanRequest {
                start,
                horizon,
                instruction,
                actions: ActionSet::default(),
            },
        };
    }
    unreachable!("a free cell always appears within the attempt budget")
}

/// Outcome of one instance comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InstanceOutcome {
    /// Same trajectory, scores within tolerance.
    Agree { score_gap: f64 },
    /// Different trajectory, but it ties the optimum within tolerance.
    ExplainedTie { score_gap: f64 },
    /// Different trajectory with a real score gap.
    Mismatch { score_gap: f64 },
}

/// Classify a planner trajectory against the enumeration optimum.
pub fn classify(
    planned: &crate::planner::Trajectory,
    enumerated: &crate::planner::Trajectory,
) -> InstanceOutcome {
    let gap = (planned.cumulative_log_likelihood - enumerated.cumulative_log_likelihood).abs();
    if planned.states == enumerated.states && planned.actions == enumerated.actions {
        InstanceOutcome::Agree { score_gap: gap }
    } else if gap <= SCORE_TOLERANCE {
        InstanceOutcome::ExplainedTie { score_gap: gap }
    } else {
        InstanceOutcome::Mismatch { score_gap: gap }
    }
}

/// Compare the planner against enumeration on one instance.
pub fn compare_instance(instance: &OracleInstance) -> Result<InstanceOutcome, PlanError> {
    let field = emission_log_field(
        &instance.model,
        &instance.costmap,
        &instance.request.instruction,
    );
    let request = &instance.request;
    let planned = plan_on_field(&field, request.start, request.horizon, &request.actions);
    let enumerated = brute_force_on_field(&field, request.start, request.horizon, &request.actions);
    match (planned, enumerated) {
        (Err(PlanError::Infeasible), Err(PlanError::Infeasible)) => {
            Ok(InstanceOutcome::Agree { score_gap: 0.0 })
        }
        (Ok(a), Ok(b)) => Ok(classify(&a, &b)),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// Run the full battery.
pub fn run_battery(params: &OracleParams) -> Result<OracleReport, OracleError> {
    if params.instances == 0 {
        return Err(OracleError::BadParams(
            "instances must be at least 1".into(),
        ));
    }
    if params.max_grid < 2 {
        return Err(OracleError::BadParams("max_grid must be at least 2".into()));
    }
    // |A| = 5 with the default move set; refuse horizons whose enumeration
    // would blow the budget
    let sequences = 5u64.checked_pow(params.max_horizon as u32);
    if params.max_horizon == 0
        || sequences.is_none()
        || sequences.unwrap() > crate::planner::BRUTE_FORCE_BUDGET
    {
        return Err(OracleError::BadParams(format!(
            "max_horizon {} exceeds the enumeration budget",
            params.max_horizon
        )));
    }

    let mut report = OracleReport {
        instances: params.instances,
        max_score_gap: 0.0,
        tie_cases: 0,
        mismatches: 0,
    };
    for i in 0..params.instances {
        let instance = random_instance(
            params.seed.wrapping_add(i as u64),
            params.max_grid,
            params.max_horizon,
        );
        match compare_instance(&instance)? {
            InstanceOutcome::Agree { score_gap } => {
                report.max_score_gap = report.max_score_gap.max(score_gap);
            }
            InstanceOutcome::ExplainedTie { score_gap } => {
                report.max_score_gap = report.max_score_gap.max(score_gap);
                report.tie_cases += 1;
            }
            InstanceOutcome::Mismatch { score_gap } => {
                report.max_score_gap = report.max_score_gap.max(score_gap);
                report.mismatches += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_battery_passes() {
        let report = run_battery(&OracleParams::default()).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.mismatches, 0);
        assert!(report.max_score_gap <= SCORE_TOLERANCE);
    }

    #[test]
    fn budget_exceeding_battery_is_refused() {
        let params = OracleParams {
            max_horizon: 12, // 5^12 > budget
            ..OracleParams::default()
        };
        assert!(matches!(
            run_battery(&params),
            Err(OracleError::BadParams(_))
        ));
    }

    #[test]
    fn a_corrupted_plan_is_detected() {
        // mutation sanity: replace the plan with an all-stay trajectory
        // on an instance whose optimum moves; classification must flag it
        let mut flagged = 0;
        for seed in 0..20u64 {
            let instance = random_instance(seed, 5, 4);
            let field = emission_log_field(
                &instance.model,
                &instance.costmap,
                &instance.request.instruction,
            );
            let request = &instance.request;
            let Ok(optimal) =
                brute_force_on_field(&field, request.start, request.horizon, &request.actions)
            else {
                continue;
            };
            if optimal.actions.iter().all(|&a| a == 0) {
                continue; // staying is already optimal here
            }
            let stay = crate::planner::Trajectory::from_states(
                vec![request.start; request.horizon + 1],
                vec![0; request.horizon],
                &field,
            );
            match classify(&stay, &optimal) {
                InstanceOutcome::Mismatch { score_gap } => {
                    assert!(score_gap > SCORE_TOLERANCE);
                    flagged += 1;
                }
                other => panic!("corrupted plan not flagged: {other:?}"),
            }
        }
        assert!(flagged > 0, "no instance exercised the mutation check");
    }

    #[test]
    fn instances_are_deterministic() {
        let a = random_instance(3, 5, 5);
        let b = random_instance(3, 5, 5);
        assert_eq!(a.model, b.model);
        assert_eq!(a.request.start, b.request.start);
        assert_eq!(a.request.horizon, b.request.horizon);
    }
}
