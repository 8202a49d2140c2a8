//! Trial execution and the NSR / Near-NSR / PL metrics.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Method, PlaceRegion, Scenario};
use crate::approx::{
    approx_plan_with_field, baseline_database, baseline_random, baseline_spatial_concept,
};
use crate::concept::{emission_log_field, ScalarField};
use crate::costmap::CostMap;
use crate::grid::CellIndex;
use crate::planner::{plan_on_field, score_trajectory, PlanError, PlanRequest, Trajectory};

/// Outcome of one method on one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: Method,
    /// Final state inside any region named by the instruction.
    pub success: bool,
    /// Success, and the entered region is the closest named one by
    /// shortest-path distance from the start.
    pub nearest_success: bool,
    /// Non-stay moves taken.
    pub path_length: usize,
    /// Horizon-padded total log-likelihood; `None` on failure.
    pub cumulative_log_likelihood: Option<f64>,
    /// Horizon-padded per-step log-likelihoods; empty on failure.
    pub per_step_log_likelihoods: Vec<f64>,
    pub failure: Option<String>,
}

/// Trial result plus the trajectory for dumping.
#[derive(Clone, Debug)]
pub struct MethodRun {
    pub result: TrialResult,
    pub trajectory: Option<Trajectory>,
}

/// Shortest-path cell distances from `start` over traversable cells,
/// breadth-first under the scenario's non-stay moves.
fn bfs_distances(costmap: &CostMap, start: CellIndex, scenario: &Scenario) -> Vec<usize> {
    let geometry = &costmap.geometry;
    let n = geometry.n_cells();
    let mut dist = vec![usize::MAX; n];
    let start_index = geometry.index(start);
    dist[start_index] = 0;
    let mut queue = VecDeque::from([start_index]);
    let moves: Vec<_> = scenario
        .actions
        .moves()
        .iter()
        .filter(|m| !m.is_stay())
        .copied()
        .collect();
    while let Some(i) = queue.pop_front() {
        let cell = geometry.cell_at(i);
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
            if dist[ni] != usize::MAX || costmap.values()[ni] <= 0.0 {
                continue;
            }
            dist[ni] = dist[i] + 1;
            queue.push_back(ni);
        }
    }
    dist
}

fn evaluate(
    scenario: &Scenario,
    method: Method,
    planned: Result<Trajectory, PlanError>,
    dist: &[usize],
    named_regions: &[&PlaceRegion],
) -> MethodRun {
    let trajectory = match planned {
        Ok(t) => t,
        Err(e) => {
            return MethodRun {
                result: TrialResult {
                    method,
                    success: false,
                    nearest_success: false,
                    path_length: 0,
                    cumulative_log_likelihood: None,
                    per_step_log_likelihoods: Vec::new(),
                    failure: Some(e.to_string()),
                },
                trajectory: None,
            }
        }
    };

    let geometry = &scenario.costmap.geometry;
    let final_pos = geometry.cell_center(trajectory.final_state());
    let entered: Vec<usize> = named_regions
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rect.contains(final_pos))
        .map(|(i, _)| i)
        .collect();
    let success = !entered.is_empty();

    let region_dist = |r: &PlaceRegion| -> usize {
        geometry
            .world_to_cell(r.anchor)
            .map(|c| dist[geometry.index(c)])
            .unwrap_or(usize::MAX)
    };
    let dmin = named_regions
        .iter()
        .map(|r| region_dist(r))
        .min()
        .unwrap_or(usize::MAX);
    let nearest_success = success
        && dmin != usize::MAX
        && entered
            .iter()
            .any(|&i| region_dist(named_regions[i]) == dmin);

    let score = score_trajectory(
        &trajectory,
        &scenario.model,
        &scenario.costmap,
        &scenario.instruction,
        scenario.horizon,
    );
    // a goal-point path longer than the horizon cannot be padded into the
    // fixed-horizon class; keep its raw sum and skip it in the series
    let (cumulative, per_step) = match score {
        Ok(s) => (Some(s.total), s.per_step),
        Err(_) => (Some(trajectory.cumulative_log_likelihood), Vec::new()),
    };

    MethodRun {
        result: TrialResult {
            method,
            success,
            nearest_success,
            path_length: trajectory.path_length(&scenario.actions),
            cumulative_log_likelihood: cumulative,
            per_step_log_likelihoods: per_step,
            failure: None,
        },
        trajectory: Some(trajectory),
    }
}

/// Run every requested method on a scenario. Per-method failures are
/// recorded in their results; the batch never aborts.
pub fn run_scenario(scenario: &Scenario) -> Vec<MethodRun> {
    let field: ScalarField =
        emission_log_field(&scenario.model, &scenario.costmap, &scenario.instruction);
    let dist = bfs_distances(&scenario.costmap, scenario.start, scenario);
    let named_regions: Vec<&PlaceRegion> = scenario
        .regions
        .iter()
        .filter(|r| {
            scenario
                .model
                .vocabulary
                .index_of(&r.name)
                .map(|i| scenario.instruction.counts()[i] > 0)
                .unwrap_or(false)
        })
        .collect();

    let request = PlanRequest {
        start: scenario.start,
        horizon: scenario.horizon,
        instruction: scenario.instruction.clone(),
        actions: scenario.actions.clone(),
    };

    scenario
        .methods
        .iter()
        .map(|&method| {
            let planned: Result<Trajectory, PlanError> = match method {
                Method::Viterbi => {
                    plan_on_field(&field, scenario.start, scenario.horizon, &scenario.actions)
                }
                Method::Approx => approx_plan_with_field(
                    &request,
                    &scenario.model,
                    &scenario.costmap,
                    &field,
                    scenario.candidates,
                )
                .map(|o| o.trajectory),
                Method::SpatialConcept => {
                    baseline_spatial_concept(&request, &scenario.model, &scenario.costmap, &field)
                        .map(|o| o.result.trajectory)
                }
                Method::Database => baseline_database(
                    &request,
                    &scenario.training,
                    &scenario.model,
                    &scenario.costmap,
                    &field,
                    scenario.seed,
                )
                .map(|o| o.result.trajectory),
                Method::Random => baseline_random(
                    &request,
                    &scenario.training,
                    &scenario.costmap,
                    &field,
                    scenario.seed,
                )
                .map(|o| o.result.trajectory),
            };
            evaluate(scenario, method, planned, &dist, &named_regions)
        })
        .collect()
}

/// One metrics-table row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: Method,
    pub trials: usize,
    pub successes: usize,
    pub nearest_successes: usize,
    /// Navigation success rate.
    pub nsr: f64,
    /// Success rate restricted to the closest named place.
    pub near_nsr: f64,
    /// Mean path length over successful trials; `None` with no successes.
    pub mean_path_length: Option<f64>,
}

/// Aggregate trial results per method, in the order methods first appear.
pub fn aggregate(results: &[TrialResult]) -> Vec<MetricsRow> {
    let mut order: Vec<Method> = Vec::new();
    for r in results {
        if !order.contains(&r.method) {
            order.push(r.method);
        }
    }
    order
        .into_iter()
        .map(|method| {
            let of_method: Vec<&TrialResult> =
                results.iter().filter(|r| r.method == method).collect();
            let trials = of_method.len();
            let successes = of_method.iter().filter(|r| r.success).count();
            let nearest_successes = of_method.iter().filter(|r| r.nearest_success).count();
            let lengths: Vec<usize> = of_method
                .iter()
                .filter(|r| r.success)
                .map(|r| r.path_length)
                .collect();
            MetricsRow {
                method,
                trials,
                successes,
                nearest_successes,
                nsr: successes as f64 / trials as f64,
                near_nsr: nearest_successes as f64 / trials as f64,
                mean_path_length: (!lengths.is_empty())
                    .then(|| lengths.iter().sum::<usize>() as f64 / lengths.len() as f64),
            }
        })
        .collect()
}

/// Human-readable metrics table.
pub fn metrics_table(rows: &[MetricsRow]) -> String {
    let mut out = String::from("method               NSR    Near-NSR  PL\n");
    for r in rows {
        let pl = r
            .mean_path_length
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "N/A".into());
        out.push_str(&format!(
            "({}) {:<15} {:<6.2} {:<9.2} {}\n",
            r.method.letter(),
            r.method.cli_name(),
            r.nsr,
            r.near_nsr,
            pl
        ));
    }
    out
}

/// CSV form of the metrics table.
pub fn metrics_csv(rows: &[MetricsRow]) -> Vec<u8> {
    let mut out = String::from("method,trials,nsr,near_nsr,mean_path_length\n");
    for r in rows {
        let pl = r
            .mean_path_length
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method.cli_name(),
            r.trials,
            r.nsr,
            r.near_nsr,
            pl
        ));
    }
    out.into_bytes()
}

/// Per-step and cumulative log-likelihood curves, one CSV block per
/// method, exactly `horizon` rows each; failed methods are skipped.
pub fn loglik_series(results: &[TrialResult], horizon: usize) -> Vec<u8> {
    let mut out = String::from("method,step,step_log_likelihood,cumulative_log_likelihood\n");
    for r in results {
        if r.per_step_log_likelihoods.is_empty() {
            continue;
        }
        debug_assert_eq!(r.per_step_log_likelihoods.len(), horizon);
        let mut cumulative = 0.0;
        for (step, v) in r.per_step_log_likelihoods.iter().take(horizon).enumerate() {
            cumulative += v;
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.method.cli_name(),
                step + 1,
                v,
                cumulative
            ));
        }
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(method: Method, success: bool, nearest: bool, len: usize) -> TrialResult {
        TrialResult {
            method,
            success,
            nearest_success: nearest,
            path_length: len,
            cumulative_log_likelihood: success.then_some(-1.0),
            per_step_log_likelihoods: vec![],
            failure: (!success).then(|| "goal-infeasible".into()),
        }
    }

    #[test]
    fn aggregate_computes_the_success_rates() {
        let mut results = Vec::new();
        for i in 0..20 {
            results.push(result(Method::Viterbi, true, i < 15, 10 + i));
        }
        let rows = aggregate(&results);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].trials, 20);
        assert!((rows[0].nsr - 1.0).abs() < 1e-12);
        assert!((rows[0].near_nsr - 0.75).abs() < 1e-12);
        assert!((rows[0].mean_path_length.unwrap() - 19.5).abs() < 1e-12);
    }

    #[test]
    fn zero_successes_report_na_path_length() {
        let rows = aggregate(&[result(Method::Random, false, false, 0)]);
        assert_eq!(rows[0].nsr, 0.0);
        assert_eq!(rows[0].mean_path_length, None);
        assert!(metrics_table(&rows).contains("N/A"));
        let csv = String::from_utf8(metrics_csv(&rows)).unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn near_nsr_never_exceeds_nsr() {
        let results: Vec<TrialResult> = (0..50)
            .map(|i| result(Method::Approx, i % 2 == 0, i % 4 == 0, 5))
            .collect();
        let rows = aggregate(&results);
        assert!(rows[0].near_nsr <= rows[0].nsr);
    }

    #[test]
    fn series_has_horizon_rows_per_method() {
        let mut r = result(Method::Viterbi, true, true, 3);
        r.per_step_log_likelihoods = vec![-1.0, -0.5, -0.5, -0.5];
        let csv = String::from_utf8(loglik_series(&[r], 4)).unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].starts_with("viterbi,1,-1,"));
        assert!(rows[3].ends_with("-2.5"));
    }
}
