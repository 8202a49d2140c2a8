//! Probabilistic cost maps derived from occupancy grids.
//!
//! Every `Occupied` and `Unknown` cell gets traversability 0. Free cells
//! ramp linearly from 0 at the robot radius to 1 at the inflation radius,
//! using center-to-center distances from an exact Euclidean distance
//! transform. Values are a likelihood factor, not a normalized
//! distribution, so no normalization is applied.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{CellIndex, CellState, GridGeometry, OccupancyGrid};

#[derive(Debug, Error)]
pub enum CostmapError {
    #[error(
        "invalid radius: robot_radius {robot} m, inflation_radius {inflation} m \
             (need 0 <= robot_radius <= inflation_radius)"
    )]
    InvalidRadius { robot: f64, inflation: f64 },
}

/// Per-cell traversability probabilities sharing the source grid geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMap {
    pub geometry: GridGeometry,
    values: Vec<f64>,
}

impl CostMap {
    pub fn value(&self, cell: CellIndex) -> f64 {
        self.values[self.geometry.index(cell)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when the cell can be occupied by the robot.
    pub fn is_traversable(&self, cell: CellIndex) -> bool {
        self.value(cell) > 0.0
    }

    /// Row-major indices of all traversable cells.
    pub fn traversable_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Build a cost map directly from values; test and tooling helper.
    pub fn from_values(geometry: GridGeometry, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), geometry.n_cells());
        Self { geometry, values }
    }
}

/// Sentinel for "no occupied cell anywhere".
const UNREACHED: i64 = i64::MAX;

/// Squared distances (in cell units) to the nearest occupied cell,
/// row-major. `UNREACHED` when the grid holds no occupied cell.
fn distance_transform(grid: &OccupancyGrid) -> Vec<i64> {
    #[cfg(feature = "parallel")]
    return distance_transform_par(grid);
    #[cfg(not(feature = "parallel"))]
    distance_transform_seq(grid)
}

/// `w + h` acts as infinity in pass 1: its square exceeds any realizable
/// squared distance `w^2 + h^2`, so it never wins once a seed exists.
fn far_sentinel(w: usize, h: usize) -> i64 {
    (w + h) as i64
}

/// Pass 1 kernel: per-row horizontal distance (in columns) to the nearest
/// occupied cell of that row.
fn sweep_row(row_cells: &[CellState], far: i64, out: &mut [i64]) {
    let mut d = far;
    for col in 0..out.len() {
        d = if row_cells[col] == CellState::Occupied {
            0
        } else {
            (d + 1).min(far)
        };
        out[col] = d;
    }
    d = far;
    for col in (0..out.len()).rev() {
        d = if row_cells[col] == CellState::Occupied {
            0
        } else {
            (d + 1).min(far)
        };
        out[col] = out[col].min(d);
    }
}

/// Pass 2 kernel: one column's exact squared distances from the squared
/// horizontal distances of pass 1.
fn sweep_column(horiz: &[i64], w: usize, h: usize, col: usize) -> Vec<i64> {
    let f: Vec<i64> = (0..h)
        .map(|row| {
            let d = horiz[row * w + col];
            d * d
        })
        .collect();
    squared_dt_1d(&f)
}

fn scatter_columns(columns: &[Vec<i64>], w: usize, h: usize) -> Vec<i64> {
    let mut out = vec![0i64; w * h];
    for (col, col_vals) in columns.iter().enumerate() {
        for (row, &v) in col_vals.iter().enumerate() {
            out[row * w + col] = v;
        }
    }
    out
}

/// Sequential distance transform; kept callable for benchmarks and for
/// exactness checks against the parallel path.
pub fn distance_transform_seq(grid: &OccupancyGrid) -> Vec<i64> {
    let w = grid.geometry.width;
    let h = grid.geometry.height;
    if !grid.cells().contains(&CellState::Occupied) {
        return vec![UNREACHED; w * h];
    }
    let far = far_sentinel(w, h);
    let mut horiz = vec![far; w * h];
    let cells = grid.cells();
    for row in 0..h {
        sweep_row(
            &cells[row * w..(row + 1) * w],
            far,
            &mut horiz[row * w..(row + 1) * w],
        );
    }
    let columns: Vec<Vec<i64>> = (0..w).map(|col| sweep_column(&horiz, w, h, col)).collect();
    scatter_columns(&columns, w, h)
}

#[cfg(feature = "parallel")]
fn distance_transform_par(grid: &OccupancyGrid) -> Vec<i64> {
    let w = grid.geometry.width;
    let h = grid.geometry.height;
    if !grid.cells().contains(&CellState::Occupied) {
        return vec![UNREACHED; w * h];
    }
    let far = far_sentinel(w, h);
    let mut horiz = vec![far; w * h];
    let cells = grid.cells();
    horiz
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(row, out)| sweep_row(&cells[row * w..(row + 1) * w], far, out));
    let columns: Vec<Vec<i64>> = (0..w)
        .into_par_iter()
        .map(|col| sweep_column(&horiz, w, h, col))
        .collect();
    scatter_columns(&columns, w, h)
}

/// 1D squared-distance transform: `out[i] = min_j (i - j)^2 + f[j]`.
fn squared_dt_1d(f: &[i64]) -> Vec<i64> {
    let n = f.len();
    let mut v = vec![0usize; n]; // parabola apexes
    let mut z = vec![0f64; n + 1]; // envelope boundaries
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;

    let intersect = |p: usize, q: usize| -> f64 {
        // abscissa where parabola at q overtakes the one at p
        ((f[q] + (q * q) as i64 - f[p] - (p * p) as i64) as f64) / (2.0 * (q as f64 - p as f64))
    };

    for q in 1..n {
        let mut s = intersect(v[k], q);
        while s <= z[k] {
            k -= 1;
            s = intersect(v[k], q);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }

    let mut out = vec![0i64; n];
    let mut k = 0usize;
    for (i, slot) in out.iter_mut().enumerate() {
        while z[k + 1] < i as f64 {
            k += 1;
        }
        let j = v[k];
        let d = i as i64 - j as i64;
        *slot = d * d + f[j];
    }
    out
}

/// Derive the traversability map for a disc-footprint robot.
///
/// `robot_radius` is the inscribed clearance below which a free cell is
/// still untraversable; `inflation_radius` is where the ramp reaches 1.
pub fn build_costmap(
    grid: &OccupancyGrid,
    robot_radius: f64,
    inflation_radius: f64,
) -> Result<CostMap, CostmapError> {
    build_costmap_impl(grid, robot_radius, inflation_radius, distance_transform)
}

/// Sequential variant of [`build_costmap`] for benchmarks and determinism
/// checks.
pub fn build_costmap_seq(
    grid: &OccupancyGrid,
    robot_radius: f64,
    inflation_radius: f64,
) -> Result<CostMap, CostmapError> {
    build_costmap_impl(grid, robot_radius, inflation_radius, distance_transform_seq)
}

fn build_costmap_impl(
    grid: &OccupancyGrid,
    robot_radius: f64,
    inflation_radius: f64,
    dt: impl Fn(&OccupancyGrid) -> Vec<i64>,
) -> Result<CostMap, CostmapError> {
    if !robot_radius.is_finite()
        || !inflation_radius.is_finite()
        || robot_radius < 0.0
        || inflation_radius < robot_radius
    {
        return Err(CostmapError::InvalidRadius {
            robot: robot_radius,
            inflation: inflation_radius,
        });
    }
    let dt2 = dt(grid);
    let res = grid.geometry.resolution;
    let values = grid
        .cells()
        .iter()
        .zip(dt2.iter())
        .map(|(&state, &d2)| cell_cost(state, d2, res, robot_radius, inflation_radius))
        .collect();
    Ok(CostMap {
        geometry: grid.geometry.clone(),
        values,
    })
}

/// The per-cell ramp; shared with the brute-force oracle in tests so the
/// comparison is over the distance computation alone.
pub fn cell_cost(
    state: CellState,
    squared_cell_distance: i64,
    resolution: f64,
    robot_radius: f64,
    inflation_radius: f64,
) -> f64 {
    if state != CellState::Free {
        return 0.0;
    }
    let d = if squared_cell_distance == UNREACHED {
        f64::INFINITY
    } else {
        (squared_cell_distance as f64).sqrt() * resolution
    };
    if d <= robot_radius {
        0.0
    } else if inflation_radius == robot_radius {
        1.0
    } else {
        ((d - robot_radius) / (inflation_radius - robot_radius)).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridGeometry, Point2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geom(w: usize, h: usize, res: f64) -> GridGeometry {
        GridGeometry::new(w, h, res, Point2::new(0.0, 0.0)).unwrap()
    }

    fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize) -> OccupancyGrid {
        let mut grid = OccupancyGrid::filled(geom(w, h, 0.5), CellState::Free);
        for cell in grid.geometry.cells().collect::<Vec<_>>() {
            let r: f64 = rng.gen();
            if r < 0.15 {
                grid.set_state(cell, CellState::Occupied);
            } else if r < 0.2 {
                grid.set_state(cell, CellState::Unknown);
            }
        }
        grid
    }

    /// Brute-force squared distance scan; the independent oracle.
    fn brute_dt2(grid: &OccupancyGrid) -> Vec<i64> {
        let g = &grid.geometry;
        let occupied: Vec<CellIndex> = g
            .cells()
            .filter(|&c| grid.state(c) == CellState::Occupied)
            .collect();
        g.cells()
            .map(|c| {
                occupied
                    .iter()
                    .map(|o| {
                        let dc = c.col as i64 - o.col as i64;
                        let dr = c.row as i64 - o.row as i64;
                        dc * dc + dr * dr
                    })
                    .min()
                    .unwrap_or(UNREACHED)
            })
            .collect()
    }

    #[test]
    fn corridor_ramp_values() {
        // 1D corridor, occupied at the west end, resolution 1 m
        let mut grid = OccupancyGrid::filled(geom(5, 1, 1.0), CellState::Free);
        grid.set_state(CellIndex::new(0, 0), CellState::Occupied);
        let cm = build_costmap(&grid, 0.5, 2.5).unwrap();
        let expected = [0.0, 0.25, 0.75, 1.0, 1.0];
        for (col, &e) in expected.iter().enumerate() {
            let v = cm.value(CellIndex::new(col, 0));
            assert!((v - e).abs() < 1e-12, "col {col}: {v} vs {e}");
        }
    }

    #[test]
    fn degenerate_inflation_zeroes_only_the_obstacle() {
        let mut grid = OccupancyGrid::filled(geom(5, 5, 1.0), CellState::Free);
        grid.set_state(CellIndex::new(2, 2), CellState::Occupied);
        let cm = build_costmap(&grid, 0.0, 0.0).unwrap();
        for cell in grid.geometry.cells() {
            let expected = if cell == CellIndex::new(2, 2) {
                0.0
            } else {
                1.0
            };
            assert_eq!(cm.value(cell), expected);
        }
    }

    #[test]
    fn all_free_map_is_all_ones() {
        let grid = OccupancyGrid::filled(geom(8, 6, 0.1), CellState::Free);
        let cm = build_costmap(&grid, 0.2, 0.6).unwrap();
        assert!(cm.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn unknown_cells_are_untraversable_but_do_not_inflate() {
        let mut grid = OccupancyGrid::filled(geom(4, 1, 1.0), CellState::Free);
        grid.set_state(CellIndex::new(0, 0), CellState::Unknown);
        let cm = build_costmap(&grid, 0.5, 2.5).unwrap();
        assert_eq!(cm.value(CellIndex::new(0, 0)), 0.0);
        // no occupied cell anywhere, so the rest is fully traversable
        for col in 1..4 {
            assert_eq!(cm.value(CellIndex::new(col, 0)), 1.0);
        }
    }

    #[test]
    fn negative_radius_is_rejected() {
        let grid = OccupancyGrid::filled(geom(2, 2, 1.0), CellState::Free);
        assert!(build_costmap(&grid, -0.1, 0.5).is_err());
        assert!(build_costmap(&grid, 0.5, 0.1).is_err());
    }

    #[test]
    fn distance_transform_matches_brute_force_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..40 {
            let w = rng.gen_range(1..=32);
            let h = rng.gen_range(1..=32);
            let grid = random_grid(&mut rng, w, h);
            assert_eq!(distance_transform(&grid), brute_dt2(&grid), "trial {trial}");
            assert_eq!(distance_transform_seq(&grid), brute_dt2(&grid));
        }
    }

    #[test]
    fn costmap_zero_set_and_ramp_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let w = rng.gen_range(2..=24);
            let h = rng.gen_range(2..=24);
            let grid = random_grid(&mut rng, w, h);
            let rr = rng.gen_range(0.0..0.8);
            let ir = rr + rng.gen_range(0.0..1.5);
            let cm = build_costmap(&grid, rr, ir).unwrap();
            let dt2 = brute_dt2(&grid);
            for (i, cell) in grid.geometry.cells().enumerate() {
                let expected =
                    cell_cost(grid.state(cell), dt2[i], grid.geometry.resolution, rr, ir);
                assert_eq!(cm.value(cell), expected, "cell {cell:?}");
            }
        }
    }

    #[test]
    fn cost_is_monotone_along_a_ray_from_an_isolated_obstacle() {
        let mut grid = OccupancyGrid::filled(geom(21, 21, 1.0), CellState::Free);
        grid.set_state(CellIndex::new(10, 10), CellState::Occupied);
        let cm = build_costmap(&grid, 1.0, 8.0).unwrap();
        for (dc, dr) in [(1i64, 0i64), (0, 1), (1, 1), (-1, 1)] {
            let mut prev = -1.0;
            for step in 0..10 {
                let col = (10 + dc * step) as usize;
                let row = (10 + dr * step) as usize;
                let v = cm.value(CellIndex::new(col, row));
                assert!(v >= prev, "ray ({dc},{dr}) step {step}");
                prev = v;
            }
        }
    }
}
