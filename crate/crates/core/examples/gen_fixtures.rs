//! Regenerates the bundled fixtures under `fixtures/`.
//!
//! Run from the workspace root:
//!
//! ```text
//! cargo run -p placenav-core --example gen_fixtures
//! ```
//!
//! Outputs are deterministic; a rerun leaves the files byte-identical.

use std::fs;
use std::path::PathBuf;

use placenav_core::concept::{fit_fixed_assignments, save_model, Hyperparameters};
use placenav_core::eval::{generate_environment, EnvironmentSpec, Rect, RoomSpec};
use placenav_core::grid::{save_map, Point2};

fn room(names: &[&str], x0: f64, y0: f64, x1: f64, y1: f64, weight: f64) -> RoomSpec {
    RoomSpec {
        names: names.iter().map(|s| s.to_string()).collect(),
        rect: Rect::new(Point2::new(x0, y0), Point2::new(x1, y1)),
        weight,
    }
}

/// Ten named places around the walls of a 15 m square apartment.
fn ten_place_spec() -> EnvironmentSpec {
    let w = 2.4; // room side, meters
    let rooms = vec![
        room(&["bedroom"], 0.8, 0.8, 0.8 + w, 0.8 + w, 1.0),
        room(&["kitchen"], 4.4, 0.8, 4.4 + w, 0.8 + w, 1.0),
        room(&["dining-room"], 8.0, 0.8, 8.0 + w, 0.8 + w, 1.0),
        room(&["bathroom"], 11.6, 0.8, 11.6 + w, 0.8 + w, 1.0),
        room(&["living-room"], 0.8, 6.0, 0.8 + w, 6.0 + w, 1.0),
        room(&["study"], 11.6, 6.0, 11.6 + w, 6.0 + w, 1.0),
        room(&["bedroom"], 0.8, 11.6, 0.8 + w, 11.6 + w, 1.0),
        room(&["toilet"], 4.4, 11.6, 4.4 + w, 11.6 + w, 1.0),
        room(&["entrance"], 8.0, 11.6, 8.0 + w, 11.6 + w, 1.0),
        room(&["bedroom"], 11.6, 11.6, 11.6 + w, 11.6 + w, 1.0),
    ];
    EnvironmentSpec {
        width: 150,
        height: 150,
        resolution: 0.1,
        origin: Point2::new(0.0, 0.0),
        rooms,
        door_cells: 5,
        samples_per_weight: 15,
    }
}

fn main() {
    let root: PathBuf = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let dir = root.join("ten_place");
    fs::create_dir_all(&dir).expect("create fixtures dir");

    let spec = ten_place_spec();
    let (grid, training, regions) = generate_environment(&spec, 42).expect("generate");
    let model = fit_fixed_assignments(&training, &Hyperparameters::default()).expect("fit");

    let (pgm, meta) = save_map(&grid, "map.pgm");
    fs::write(dir.join("map.pgm"), pgm).expect("map.pgm");
    fs::write(dir.join("map.yaml"), meta).expect("map.yaml");
    fs::write(dir.join("train.csv"), training.to_csv()).expect("train.csv");
    fs::write(dir.join("model.json"), save_model(&model)).expect("model.json");
    let mut regions_json = serde_json::to_vec_pretty(&regions).expect("regions");
    regions_json.push(b'\n');
    fs::write(dir.join("regions.json"), regions_json).expect("regions.json");

    println!(
        "wrote {} ({} rooms, {} records, {} regions)",
        dir.display(),
        spec.rooms.len(),
        training.len(),
        regions.len()
    );
}
