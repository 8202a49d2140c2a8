//! Scenario files: a generator spec plus trial expansion.
//!
//! A scenario file describes the environment, the fit, the instruction
//! and the methods to compare. Each trial re-generates the environment
//! and the start cell from `seed + trial_index`, so a batch is fully
//! reproducible from the file alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    generate_environment, run_scenario, EnvironmentSpec, EvalError, Method, MethodRun, Scenario,
};
use crate::concept::{fit_fixed_assignments, fit_gibbs, Hyperparameters, Instruction};
use crate::costmap::build_costmap;
use crate::grid::Point2;
use crate::planner::ActionSet;

/// How the model is obtained from the generated training set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FitSpec {
    /// Posterior means from the generator's known assignments.
    #[default]
    Fixed,
    /// Gibbs sampling with fixed cluster counts.
    Gibbs {
        concepts: usize,
        positions: usize,
        iters: usize,
    },
}

fn default_robot_radius() -> f64 {
    0.215
}

fn default_inflation_radius() -> f64 {
    0.6
}

fn default_candidates() -> usize {
    10
}

fn default_trials() -> usize {
    1
}

fn default_stay() -> bool {
    true
}

/// The on-disk scenario schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub environment: EnvironmentSpec,
    #[serde(default = "default_robot_radius")]
    pub robot_radius: f64,
    #[serde(default = "default_inflation_radius")]
    pub inflation_radius: f64,
    /// Fixed world-coordinate start; sampled outside the rooms when
    /// absent.
    #[serde(default)]
    pub start: Option<[f64; 2]>,
    pub instruction: Vec<String>,
    pub horizon: usize,
    pub methods: Vec<Method>,
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    #[serde(default)]
    pub diagonals: bool,
    #[serde(default = "default_stay")]
    pub stay: bool,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub fit: FitSpec,
}

impl ScenarioFile {
    pub fn from_json(bytes: &[u8]) -> Result<Self, EvalError> {
        let file: ScenarioFile =
            serde_json::from_slice(bytes).map_err(|e| EvalError::BadScenario(e.to_string()))?;
        if file.horizon == 0 {
            return Err(EvalError::BadScenario("horizon must be at least 1".into()));
        }
        if file.methods.is_empty() {
            return Err(EvalError::BadScenario("no methods requested".into()));
        }
        if file.instruction.is_empty() {
            return Err(EvalError::BadScenario("instruction is empty".into()));
        }
        Ok(file)
    }
}

/// Materialize one trial of a scenario file.
pub fn build_trial(file: &ScenarioFile, trial: usize) -> Result<Scenario, EvalError> {
    let trial_seed = file.seed.wrapping_add(trial as u64);
    let (grid, training, regions) = generate_environment(&file.environment, trial_seed)?;
    let costmap = build_costmap(&grid, file.robot_radius, file.inflation_radius)?;
    let model = match &file.fit {
        FitSpec::Fixed => fit_fixed_assignments(&training, &Hyperparameters::default())?,
        FitSpec::Gibbs {
            concepts,
            positions,
            iters,
        } => fit_gibbs(
            &training,
            &Hyperparameters::default(),
            *concepts,
            *positions,
            *iters,
            trial_seed,
        )?,
    };
    let (instruction, ignored) = Instruction::from_words(&model.vocabulary, &file.instruction)?;
    if !ignored.is_empty() {
        // generated vocabularies are exactly the room names, so an
        // unknown word can never name a region
        return Err(EvalError::BadScenario(format!(
            "instruction words {ignored:?} name no region of the environment"
        )));
    }

    let start = match file.start {
        Some([x, y]) => {
            let cell = costmap
                .geometry
                .world_to_cell(Point2::new(x, y))
                .filter(|&c| costmap.is_traversable(c))
                .ok_or_else(|| {
                    EvalError::BadScenario(format!("start ({x}, {y}) is not a traversable cell"))
                })?;
            cell
        }
        None => {
            // uniform over traversable cells outside every room
            let eligible: Vec<usize> = costmap
                .traversable_indices()
                .into_iter()
                .filter(|&i| {
                    let p = costmap.geometry.cell_center(costmap.geometry.cell_at(i));
                    !regions.iter().any(|r| r.rect.contains(p))
                })
                .collect();
            if eligible.is_empty() {
                return Err(EvalError::NoStartCell);
            }
            // distinct stream from the generator's
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed ^ 0x9E37_79B9_7F4A_7C15);
            costmap
                .geometry
                .cell_at(eligible[rng.gen_range(0..eligible.len())])
        }
    };

    Ok(Scenario {
        grid,
        costmap,
        model,
        training,
        regions,
        start,
        instruction,
        horizon: file.horizon,
        methods: file.methods.clone(),
        candidates: file.candidates,
        actions: ActionSet::new(file.diagonals, file.stay),
        seed: trial_seed,
    })
}

/// Build and run every trial of a scenario file. Trials are independent;
/// with the `parallel` feature they run concurrently, collected in trial
/// order.
pub fn run_trials(file: &ScenarioFile) -> Result<Vec<Vec<MethodRun>>, EvalError> {
    let run_one = |trial: usize| -> Result<Vec<MethodRun>, EvalError> {
        let scenario = build_trial(file, trial)?;
        Ok(run_scenario(&scenario))
    };
    #[cfg(feature = "parallel")]
    return (0..file.trials).into_par_iter().map(run_one).collect();
    #[cfg(not(feature = "parallel"))]
    (0..file.trials).map(run_one).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Rect;
    use crate::eval::{aggregate, RoomSpec};

    fn small_file() -> ScenarioFile {
        ScenarioFile {
            environment: EnvironmentSpec {
                width: 40,
                height: 40,
                resolution: 0.1,
                origin: Point2::new(0.0, 0.0),
                rooms: vec![
                    RoomSpec {
                        names: vec!["bedroom".into()],
                        rect: Rect::new(Point2::new(0.4, 0.4), Point2::new(1.6, 1.6)),
                        weight: 1.0,
                    },
                    RoomSpec {
                        names: vec!["kitchen".into()],
                        rect: Rect::new(Point2::new(2.4, 2.4), Point2::new(3.6, 3.6)),
                        weight: 1.0,
                    },
                ],
                door_cells: 3,
                samples_per_weight: 15,
            },
            robot_radius: 0.0,
            inflation_radius: 0.1,
            start: None,
            instruction: vec!["bedroom".into()],
            horizon: 60,
            methods: vec![Method::Viterbi, Method::SpatialConcept],
            candidates: 10,
            diagonals: false,
            stay: true,
            seed: 5,
            trials: 3,
            fit: FitSpec::Fixed,
        }
    }

    #[test]
    fn trials_run_and_aggregate() {
        let file = small_file();
        let runs = run_trials(&file).unwrap();
        assert_eq!(runs.len(), 3);
        let results: Vec<_> = runs.iter().flatten().map(|r| r.result.clone()).collect();
        let rows = aggregate(&results);
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.trials, 3);
            assert!(row.near_nsr <= row.nsr);
        }
        // the exact planner should reach the single bedroom every time here
        assert_eq!(rows[0].method, Method::Viterbi);
        assert!((rows[0].nsr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trials_are_deterministic() {
        let file = small_file();
        let a = run_trials(&file).unwrap();
        let b = run_trials(&file).unwrap();
        for (ra, rb) in a.iter().flatten().zip(b.iter().flatten()) {
            assert_eq!(ra.result, rb.result);
            assert_eq!(ra.trajectory, rb.trajectory);
        }
    }

    #[test]
    fn instruction_words_must_name_a_region() {
        let mut file = small_file();
        file.instruction = vec!["bedroom".into(), "garage".into()];
        let err = build_trial(&file, 0).unwrap_err();
        assert!(matches!(err, EvalError::BadScenario(_)), "{err}");
    }

    #[test]
    fn json_round_trip_and_validation() {
        let file = small_file();
        let bytes = serde_json::to_vec(&file).unwrap();
        let back = ScenarioFile::from_json(&bytes).unwrap();
        assert_eq!(back, file);
        let err = ScenarioFile::from_json(b"{\"bad\": true}").unwrap_err();
        assert!(matches!(err, EvalError::BadScenario(_)));
    }
}
