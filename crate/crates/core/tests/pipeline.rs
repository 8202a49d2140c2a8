//! Cross-module invariants exercised end to end on randomized inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use placenav_core::approx::{approx_plan_with_field, baseline_spatial_concept};
use placenav_core::concept::{emission_log_field, emission_log_field_seq, ScalarField};
use placenav_core::costmap::{build_costmap, build_costmap_seq};
use placenav_core::eval::{build_trial, run_scenario, Method, ScenarioFile};
use placenav_core::grid::{load_map, save_map, CellState, GridGeometry, OccupancyGrid, Point2};
use placenav_core::oracle::random_instance;
use placenav_core::planner::{
    brute_force_on_field, plan_on_field, plan_on_field_seq, score_trajectory, ActionSet,
    PlanRequest,
};

fn scenario_file() -> ScenarioFile {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/three_bedroom/scenario.json");
    ScenarioFile::from_json(&std::fs::read(path).expect("fixture")).expect("parses")
}

#[test]
fn map_round_trip_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..25 {
        let w = rng.gen_range(1..=40);
        let h = rng.gen_range(1..=40);
        let geometry = GridGeometry::new(
            w,
            h,
            [0.05, 0.1, 0.25][rng.gen_range(0..3)],
            Point2::new(rng.gen_range(-20.0..0.0), rng.gen_range(-20.0..0.0)),
        )
        .unwrap();
        let mut grid = OccupancyGrid::filled(geometry, CellState::Free);
        for cell in grid.geometry.cells().collect::<Vec<_>>() {
            let r: f64 = rng.gen();
            if r < 0.2 {
                grid.set_state(cell, CellState::Occupied);
            } else if r < 0.35 {
                grid.set_state(cell, CellState::Unknown);
            }
        }
        let (image, meta) = save_map(&grid, "map.pgm");
        let loaded = load_map(&image, meta.as_bytes()).unwrap();
        assert_eq!(loaded, grid);
    }
}

#[test]
fn planner_outputs_are_safe_and_connected_on_random_maps() {
    // every state of every returned trajectory sits on a traversable cell
    // and consecutive states differ by a declared move
    let mut checked = 0;
    for seed in 0..100u64 {
        let instance = random_instance(seed, 6, 5);
        let field = emission_log_field(
            &instance.model,
            &instance.costmap,
            &instance.request.instruction,
        );
        let request = &instance.request;
        let Ok(trajectory) =
            plan_on_field(&field, request.start, request.horizon, &request.actions)
        else {
            continue;
        };
        trajectory.validate(&request.actions, &field).unwrap();
        for &state in &trajectory.states[1..] {
            assert!(instance.costmap.value(state) > 0.0, "seed {seed}");
        }
        checked += 1;
    }
    assert!(checked >= 80, "only {checked} feasible instances");
}

#[test]
fn shift_invariance_of_the_exact_planner() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let actions = ActionSet::default();
    for _ in 0..20 {
        let w = rng.gen_range(3..=7);
        let h = rng.gen_range(3..=7);
        let values: Vec<f64> = (0..w * h)
            .map(|_| {
                if rng.gen_bool(0.15) {
                    f64::NEG_INFINITY
                } else {
                    rng.gen_range(-5.0..5.0)
                }
            })
            .collect();
        let field = ScalarField {
            width: w,
            height: h,
            values,
        };
        let free: Vec<usize> = field
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, _)| i)
            .collect();
        if free.is_empty() {
            continue;
        }
        let start = field.cell_at(free[rng.gen_range(0..free.len())]);
        let horizon = rng.gen_range(1..=5);
        let Ok(base) = plan_on_field(&field, start, horizon, &actions) else {
            continue;
        };
        let constant = rng.gen_range(-10.0..10.0);
        let shifted = ScalarField {
            width: w,
            height: h,
            values: field
                .values
                .iter()
                .map(|v| if v.is_finite() { v + constant } else { *v })
                .collect(),
        };
        let moved = plan_on_field(&shifted, start, horizon, &actions).unwrap();
        assert_eq!(base.states, moved.states, "argmax trajectory changed");
        let expected = base.cumulative_log_likelihood + horizon as f64 * constant;
        assert!((moved.cumulative_log_likelihood - expected).abs() < 1e-9);
    }
}

#[test]
fn exact_planner_dominates_approximate_and_baseline_scores() {
    let file = scenario_file();
    for trial in 0..5 {
        let scenario = build_trial(&file, 40 + trial).unwrap();
        let field = emission_log_field(&scenario.model, &scenario.costmap, &scenario.instruction);
        let request = PlanRequest {
            start: scenario.start,
            horizon: scenario.horizon,
            instruction: scenario.instruction.clone(),
            actions: scenario.actions.clone(),
        };
        let exact =
            plan_on_field(&field, scenario.start, scenario.horizon, &scenario.actions).unwrap();
        let exact_score = score_trajectory(
            &exact,
            &scenario.model,
            &scenario.costmap,
            &scenario.instruction,
            scenario.horizon,
        )
        .unwrap()
        .total;

        let mut others = Vec::new();
        if let Ok(o) =
            approx_plan_with_field(&request, &scenario.model, &scenario.costmap, &field, 10)
        {
            others.push(o.trajectory);
        }
        if let Ok(o) =
            baseline_spatial_concept(&request, &scenario.model, &scenario.costmap, &field)
        {
            others.push(o.result.trajectory);
        }
        assert!(!others.is_empty());
        for other in others {
            let score = score_trajectory(
                &other,
                &scenario.model,
                &scenario.costmap,
                &scenario.instruction,
                scenario.horizon,
            )
            .unwrap()
            .total;
            assert!(
                exact_score >= score - 1e-9,
                "trial {trial}: exact {exact_score} < {score}"
            );
        }
    }
}

#[test]
fn enumeration_agrees_with_planner_on_random_fields() {
    // direct field-level check, in addition to the model-level battery
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let actions = ActionSet::default();
    for trial in 0..60 {
        let w = rng.gen_range(2..=5);
        let h = rng.gen_range(2..=5);
        let values: Vec<f64> = (0..w * h)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    f64::NEG_INFINITY
                } else {
                    rng.gen_range(-30.0..10.0)
                }
            })
            .collect();
        let field = ScalarField {
            width: w,
            height: h,
            values,
        };
        let free: Vec<usize> = field
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, _)| i)
            .collect();
        if free.is_empty() {
            continue;
        }
        let start = field.cell_at(free[rng.gen_range(0..free.len())]);
        let horizon = rng.gen_range(1..=6);
        let planned = plan_on_field(&field, start, horizon, &actions);
        let enumerated = brute_force_on_field(&field, start, horizon, &actions);
        match (planned, enumerated) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.states, b.states, "trial {trial}");
                assert_eq!(a.actions, b.actions, "trial {trial}");
                assert!((a.cumulative_log_likelihood - b.cumulative_log_likelihood).abs() <= 1e-9);
            }
            (Err(_), Err(_)) => {}
            other => panic!("trial {trial}: {other:?}"),
        }
    }
}

#[cfg(feature = "parallel")]
#[test]
fn parallel_and_sequential_pipelines_are_bitwise_identical() {
    let file = scenario_file();
    let scenario = build_trial(&file, 3).unwrap();
    let costmap_par = build_costmap(&scenario.grid, 0.2, 0.5).unwrap();
    let costmap_seq = build_costmap_seq(&scenario.grid, 0.2, 0.5).unwrap();
    assert_eq!(costmap_par, costmap_seq);

    let field_par = emission_log_field(&scenario.model, &costmap_par, &scenario.instruction);
    let field_seq = emission_log_field_seq(&scenario.model, &costmap_seq, &scenario.instruction);
    assert_eq!(field_par, field_seq);

    let par = plan_on_field(&field_par, scenario.start, 80, &scenario.actions).unwrap();
    let seq = plan_on_field_seq(&field_seq, scenario.start, 80, &scenario.actions).unwrap();
    assert_eq!(par, seq);
}

#[test]
fn exact_planner_prefers_the_nearer_of_two_same_named_rooms() {
    // two rooms answering to the same word, one much closer to the start:
    // the horizon trajectory must enter the nearer one
    use placenav_core::concept::{PositionDistribution, SpatialConcept, Vocabulary};
    use placenav_core::costmap::CostMap;
    use placenav_core::grid::CellIndex;

    let geometry = GridGeometry::new(40, 7, 1.0, Point2::new(0.0, 0.0)).unwrap();
    let costmap = CostMap::from_values(geometry, vec![1.0; 40 * 7]);
    let model = placenav_core::concept::SpatialConceptModel {
        vocabulary: Vocabulary::new(["bedroom"]).unwrap(),
        mixture: vec![0.5, 0.5],
        concepts: vec![
            SpatialConcept {
                word_dist: vec![1.0],
                position_dist: vec![1.0, 0.0],
            },
            SpatialConcept {
                word_dist: vec![1.0],
                position_dist: vec![0.0, 1.0],
            },
        ],
        positions: vec![
            PositionDistribution::new(Point2::new(8.5, 3.5), [[1.0, 0.0], [0.0, 1.0]]).unwrap(),
            PositionDistribution::new(Point2::new(35.5, 3.5), [[1.0, 0.0], [0.0, 1.0]]).unwrap(),
        ],
    };
    let (instruction, _) =
        placenav_core::concept::Instruction::from_words(&model.vocabulary, &["bedroom"]).unwrap();
    let field = emission_log_field(&model, &costmap, &instruction);
    // start sits between the rooms, clearly nearer the first
    let trajectory =
        plan_on_field(&field, CellIndex::new(14, 3), 30, &ActionSet::default()).unwrap();
    let end = trajectory.final_state();
    assert!(end.col < 15, "ended at {end:?}, expected the nearer room");
    assert_eq!(end, CellIndex::new(8, 3), "parks at the near peak");
}

#[test]
fn scenario_batches_are_reproducible() {
    let mut file = scenario_file();
    file.trials = 2;
    file.methods = vec![Method::Viterbi, Method::Database, Method::Random];
    for trial in 0..file.trials {
        let a = run_scenario(&build_trial(&file, trial).unwrap());
        let b = run_scenario(&build_trial(&file, trial).unwrap());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.result, y.result);
            assert_eq!(x.trajectory, y.trajectory);
        }
    }
}
