//! Synthetic indoor environments: walled rooms with doors, plus training
//! observations sampled inside each room.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EvalError, PlaceRegion, Rect};
use crate::concept::{TrainingRecord, TrainingSet};
use crate::grid::{CellIndex, CellState, GridGeometry, OccupancyGrid, Point2};

/// One rectangular room.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    /// Place names taught at this room; several names make synonyms.
    pub names: Vec<String>,
    /// World-coordinate footprint, walls included.
    pub rect: Rect,
    /// Usage weight: observation count scales with it.
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

/// Generator settings for a synthetic environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    #[serde(default = "default_origin")]
    pub origin: Point2,
    pub rooms: Vec<RoomSpec>,
    /// Door opening width, in cells.
    #[serde(default = "default_door_cells")]
    pub door_cells: usize,
    /// Observations per unit of room weight.
    #[serde(default = "default_samples_per_weight")]
    pub samples_per_weight: usize,
}

fn default_origin() -> Point2 {
    Point2::new(0.0, 0.0)
}

fn default_door_cells() -> usize {
    3
}

fn default_samples_per_weight() -> usize {
    15
}

/// A room's footprint in cell coordinates, walls included.
struct CellRect {
    c0: usize,
    c1: usize,
    r0: usize,
    r1: usize,
}

impl CellRect {
    fn from_world(rect: &Rect, geometry: &GridGeometry) -> Option<Self> {
        // cells whose centers fall inside the rect
        let to_col = |x: f64| ((x - geometry.origin.x) / geometry.resolution - 0.5).ceil();
        let to_col_hi = |x: f64| ((x - geometry.origin.x) / geometry.resolution - 0.5).floor();
        let to_row = |y: f64| ((y - geometry.origin.y) / geometry.resolution - 0.5).ceil();
        let to_row_hi = |y: f64| ((y - geometry.origin.y) / geometry.resolution - 0.5).floor();
        let c0 = to_col(rect.min.x);
        let c1 = to_col_hi(rect.max.x);
        let r0 = to_row(rect.min.y);
        let r1 = to_row_hi(rect.max.y);
        if c0 < 0.0 || r0 < 0.0 || c1 < c0 + 2.0 || r1 < r0 + 2.0 {
            return None;
        }
        Some(Self {
            c0: c0 as usize,
            c1: c1 as usize,
            r0: r0 as usize,
            r1: r1 as usize,
        })
    }

    fn interior_world(&self, geometry: &GridGeometry) -> Rect {
        // world bounds of the interior cells (perimeter excluded)
        Rect::new(
            Point2::new(
                geometry.origin.x + (self.c0 + 1) as f64 * geometry.resolution,
                geometry.origin.y + (self.r0 + 1) as f64 * geometry.resolution,
            ),
            Point2::new(
                geometry.origin.x + self.c1 as f64 * geometry.resolution,
                geometry.origin.y + self.r1 as f64 * geometry.resolution,
            ),
        )
    }
}

/// Which wall a room's door is carved into: the side facing the map
/// center, so rooms always open toward shared space.
fn door_side(room_center: Point2, map_center: Point2) -> &'static str {
    let dx = map_center.x - room_center.x;
    let dy = map_center.y - room_center.y;
    if dx.abs() >= dy.abs() {
        if dx >= 0.0 {
            "east"
        } else {
            "west"
        }
    } else if dy >= 0.0 {
        "north"
    } else {
        "south"
    }
}

/// Generate the map, training set and ground-truth regions for a spec.
///
/// Walls are deterministic in the spec; the seed drives only the sampled
/// observation positions.
pub fn generate_environment(
    spec: &EnvironmentSpec,
    seed: u64,
) -> Result<(OccupancyGrid, TrainingSet, Vec<PlaceRegion>), EvalError> {
    if spec.rooms.is_empty() {
        return Err(EvalError::NoRooms);
    }
    let geometry = GridGeometry::new(spec.width, spec.height, spec.resolution, spec.origin)?;
    let mut grid = OccupancyGrid::filled(geometry.clone(), CellState::Free);

    // outer frame
    for col in 0..spec.width {
        grid.set_state(CellIndex::new(col, 0), CellState::Occupied);
        grid.set_state(CellIndex::new(col, spec.height - 1), CellState::Occupied);
    }
    for row in 0..spec.height {
        grid.set_state(CellIndex::new(0, row), CellState::Occupied);
        grid.set_state(CellIndex::new(spec.width - 1, row), CellState::Occupied);
    }

    // room footprints
    let mut cell_rects = Vec::with_capacity(spec.rooms.len());
    for (index, room) in spec.rooms.iter().enumerate() {
        let cr = CellRect::from_world(&room.rect, &geometry)
            .ok_or(EvalError::RoomOutOfBounds { index })?;
        if cr.c0 < 1 || cr.r0 < 1 || cr.c1 > spec.width - 2 || cr.r1 > spec.height - 2 {
            return Err(EvalError::RoomOutOfBounds { index });
        }
        cell_rects.push(cr);
    }
    for i in 0..spec.rooms.len() {
        for jdx in i + 1..spec.rooms.len() {
            let (a, b) = (&cell_rects[i], &cell_rects[jdx]);
            if a.c0 <= b.c1 && b.c0 <= a.c1 && a.r0 <= b.r1 && b.r0 <= a.r1 {
                return Err(EvalError::RoomsOverlap(i, jdx));
            }
        }
    }

    let map_center = Rect::new(
        spec.origin,
        Point2::new(
            spec.origin.x + spec.width as f64 * spec.resolution,
            spec.origin.y + spec.height as f64 * spec.resolution,
        ),
    )
    .center();

    // walls and doors
    for (index, cr) in cell_rects.iter().enumerate() {
        for col in cr.c0..=cr.c1 {
            grid.set_state(CellIndex::new(col, cr.r0), CellState::Occupied);
            grid.set_state(CellIndex::new(col, cr.r1), CellState::Occupied);
        }
        for row in cr.r0..=cr.r1 {
            grid.set_state(CellIndex::new(cr.c0, row), CellState::Occupied);
            grid.set_state(CellIndex::new(cr.c1, row), CellState::Occupied);
        }

        let side = door_side(spec.rooms[index].rect.center(), map_center);
        let span: Vec<CellIndex> = match side {
            "east" => (cr.r0 + 1..cr.r1)
                .map(|r| CellIndex::new(cr.c1, r))
                .collect(),
            "west" => (cr.r0 + 1..cr.r1)
                .map(|r| CellIndex::new(cr.c0, r))
                .collect(),
            "north" => (cr.c0 + 1..cr.c1)
                .map(|c| CellIndex::new(c, cr.r1))
                .collect(),
            _ => (cr.c0 + 1..cr.c1)
                .map(|c| CellIndex::new(c, cr.r0))
                .collect(),
        };
        if span.len() < spec.door_cells {
            return Err(EvalError::DoorImpossible {
                index,
                door_cells: spec.door_cells,
                side,
            });
        }
        let first = (span.len() - spec.door_cells) / 2;
        for cell in &span[first..first + spec.door_cells] {
            grid.set_state(*cell, CellState::Free);
        }
    }

    // training observations
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut regions = Vec::new();
    for (index, (room, cr)) in spec.rooms.iter().zip(cell_rects.iter()).enumerate() {
        let interior = cr.interior_world(&geometry);
        let center = interior.center();
        let sx = ((interior.max.x - interior.min.x) / 6.0).max(1e-6);
        let sy = ((interior.max.y - interior.min.y) / 6.0).max(1e-6);
        let nx = Normal::new(center.x, sx).expect("finite normal");
        let ny = Normal::new(center.y, sy).expect("finite normal");

        let count = ((spec.samples_per_weight as f64) * room.weight)
            .round()
            .max(1.0) as usize;
        for _ in 0..count {
            let mut position = center;
            for _ in 0..200 {
                let p = Point2::new(nx.sample(&mut rng), ny.sample(&mut rng));
                let inside = interior.contains(p);
                let free = geometry
                    .world_to_cell(p)
                    .map(|c| grid.state(c) == CellState::Free)
                    .unwrap_or(false);
                if inside && free {
                    position = p;
                    break;
                }
            }
            records.push(TrainingRecord {
                position,
                words: room.names.clone(),
                concept_id: Some(index),
                position_id: Some(index),
            });
        }

        for name in &room.names {
            regions.push(PlaceRegion {
                name: name.clone(),
                rect: interior,
                anchor: center,
            });
        }
    }

    Ok((grid, TrainingSet { records }, regions))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_bedroom_spec() -> EnvironmentSpec {
        EnvironmentSpec {
            width: 60,
            height: 60,
            resolution: 0.1,
            origin: Point2::new(0.0, 0.0),
            rooms: vec![
                RoomSpec {
                    names: vec!["bedroom".into()],
                    rect: Rect::new(Point2::new(0.5, 0.5), Point2::new(2.0, 2.0)),
                    weight: 1.0,
                },
                RoomSpec {
                    names: vec!["bedroom".into()],
                    rect: Rect::new(Point2::new(3.5, 0.5), Point2::new(5.5, 2.0)),
                    weight: 1.0,
                },
                RoomSpec {
                    names: vec!["bedroom".into()],
                    rect: Rect::new(Point2::new(0.5, 3.5), Point2::new(2.0, 5.5)),
                    weight: 1.0,
                },
            ],
            door_cells: 3,
            samples_per_weight: 15,
        }
    }

    #[test]
    fn three_bedrooms_make_three_regions_with_fifteen_samples_each() {
        let (grid, training, regions) = generate_environment(&three_bedroom_spec(), 1).unwrap();
        assert_eq!(regions.len(), 3);
        assert!(regions.iter().all(|r| r.name == "bedroom"));
        assert_eq!(training.len(), 45);
        for region in &regions {
            let inside = training
                .records
                .iter()
                .filter(|r| region.rect.contains(r.position))
                .count();
            assert_eq!(inside, 15);
            assert!(region.rect.contains(region.anchor));
        }
        // every sampled position sits on a free cell
        for r in &training.records {
            let cell = grid.geometry.world_to_cell(r.position).unwrap();
            assert_eq!(grid.state(cell), CellState::Free);
        }
    }

    #[test]
    fn usage_weights_scale_observation_counts() {
        let mut spec = three_bedroom_spec();
        spec.rooms[2].weight = 4.0;
        let (_, training, regions) = generate_environment(&spec, 2).unwrap();
        let count = |region: &PlaceRegion| {
            training
                .records
                .iter()
                .filter(|r| region.rect.contains(r.position))
                .count()
        };
        assert_eq!(count(&regions[0]), 15);
        assert_eq!(count(&regions[2]), 60);
    }

    #[test]
    fn synonym_rooms_emit_all_names() {
        let mut spec = three_bedroom_spec();
        spec.rooms[0].names = vec!["living-room".into(), "front-of-the-TV".into()];
        let (_, training, regions) = generate_environment(&spec, 3).unwrap();
        assert_eq!(regions.len(), 4); // 2 names + 2 single-name rooms
        let in_room0: Vec<_> = training
            .records
            .iter()
            .filter(|r| regions[0].rect.contains(r.position))
            .collect();
        assert!(!in_room0.is_empty());
        for r in in_room0 {
            assert_eq!(r.words, vec!["living-room", "front-of-the-TV"]);
        }
    }

    #[test]
    fn overlapping_rooms_are_rejected() {
        let mut spec = three_bedroom_spec();
        spec.rooms[1].rect = Rect::new(Point2::new(1.0, 1.0), Point2::new(3.0, 3.0));
        assert!(matches!(
            generate_environment(&spec, 0),
            Err(EvalError::RoomsOverlap(0, 1))
        ));
    }

    #[test]
    fn room_outside_the_walls_is_rejected() {
        let mut spec = three_bedroom_spec();
        spec.rooms[0].rect = Rect::new(Point2::new(-1.0, 0.5), Point2::new(2.0, 2.0));
        assert!(matches!(
            generate_environment(&spec, 0),
            Err(EvalError::RoomOutOfBounds { index: 0 })
        ));
    }

    #[test]
    fn impossible_door_is_rejected() {
        let mut spec = three_bedroom_spec();
        spec.door_cells = 40;
        assert!(matches!(
            generate_environment(&spec, 0),
            Err(EvalError::DoorImpossible { .. })
        ));
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let spec = three_bedroom_spec();
        let a = generate_environment(&spec, 9).unwrap();
        let b = generate_environment(&spec, 9).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
        let c = generate_environment(&spec, 10).unwrap();
        assert_eq!(a.0, c.0, "walls do not depend on the seed");
        assert_ne!(a.1, c.1, "samples do");
    }
}
