//! Subcommand implementations and shared plumbing.

pub mod eval;
pub mod field;
pub mod fit;
pub mod oracle;
pub mod plan;

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use placenav_core::concept::{Instruction, SpatialConceptModel, TrainingSet, Vocabulary};
use placenav_core::costmap::{build_costmap, CostMap};
use placenav_core::grid::{load_map_with_metadata, MapMetadata, OccupancyGrid};
use placenav_core::planner::ActionSet;

use crate::errors::CliError;

/// Map-loading flags shared by `field` and `plan`.
#[derive(Args, Debug)]
pub struct MapArgs {
    /// Map image (PGM). Defaults to the `image` key of the metadata file,
    /// resolved next to it.
    #[arg(long)]
    pub map: Option<PathBuf>,

    /// Map metadata (key: value text with resolution, origin, thresholds).
    #[arg(long, value_name = "YAML")]
    pub map_meta: PathBuf,

    /// Robot footprint radius in meters; cells closer to obstacles are
    /// untraversable.
    #[arg(long, default_value_t = 0.215)]
    pub robot_radius: f64,

    /// Distance in meters at which traversability reaches 1.
    #[arg(long, default_value_t = 0.6)]
    pub inflation_radius: f64,
}

impl MapArgs {
    pub fn load(&self) -> Result<(OccupancyGrid, CostMap), CliError> {
        let meta_bytes = fs::read(&self.map_meta)
            .map_err(|e| CliError::Validation(format!("{}: {e}", self.map_meta.display())))?;
        let meta_text = String::from_utf8_lossy(&meta_bytes);
        let meta = MapMetadata::parse(&meta_text)?;
        let image_path = match &self.map {
            Some(p) => p.clone(),
            None => {
                let name = meta.image.clone().ok_or_else(|| {
                    CliError::Validation("metadata has no image key; pass --map explicitly".into())
                })?;
                self.map_meta.parent().unwrap_or(Path::new(".")).join(name)
            }
        };
        let image = fs::read(&image_path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", image_path.display())))?;
        let grid = load_map_with_metadata(&image, &meta)?;
        let costmap = build_costmap(&grid, self.robot_radius, self.inflation_radius)?;
        Ok((grid, costmap))
    }
}

/// Instruction flags shared by `field` and `plan`.
#[derive(Args, Debug)]
pub struct SayArgs {
    /// Instruction words (trigger words are stripped first).
    #[arg(long, num_args = 1.., required = true)]
    pub say: Vec<String>,

    /// Trigger/stop words removed from the instruction before lookup.
    #[arg(long, num_args = 0.., default_values_t = ["go".to_string(), "to".to_string(), "the".to_string()])]
    pub stop_words: Vec<String>,
}

impl SayArgs {
    pub fn instruction(&self, vocabulary: &Vocabulary) -> Result<Instruction, CliError> {
        let words: Vec<&String> = self
            .say
            .iter()
            .filter(|w| !self.stop_words.iter().any(|s| s.eq_ignore_ascii_case(w)))
            .collect();
        let (instruction, ignored) = Instruction::from_words(vocabulary, &words)?;
        for word in ignored {
            log::warn!("instruction word {word:?} is not in the vocabulary; ignored");
        }
        Ok(instruction)
    }
}

/// Action-set flags shared by `plan`.
#[derive(Args, Debug)]
pub struct ActionArgs {
    /// Connectivity: vonneumann (4 moves) or moore (8 moves).
    #[arg(long, default_value = "vonneumann")]
    pub actions: String,

    /// Include the stay-in-place action (the default).
    #[arg(long, overrides_with = "no_stay")]
    pub stay: bool,

    /// Exclude the stay-in-place action.
    #[arg(long, overrides_with = "stay")]
    pub no_stay: bool,
}

impl ActionArgs {
    pub fn action_set(&self) -> Result<ActionSet, CliError> {
        let diagonals = match self.actions.as_str() {
            "vonneumann" => false,
            "moore" => true,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown action set {other:?} (expected vonneumann or moore)"
                )))
            }
        };
        Ok(ActionSet::new(diagonals, !self.no_stay))
    }
}

pub fn load_model_file(path: &Path) -> Result<SpatialConceptModel, CliError> {
    let bytes =
        fs::read(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(placenav_core::concept::load_model(&bytes)?)
}

pub fn load_training_file(path: &Path) -> Result<TrainingSet, CliError> {
    let bytes =
        fs::read(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let set = if path.extension().is_some_and(|e| e == "json") {
        TrainingSet::from_json(&bytes)?
    } else {
        TrainingSet::from_csv(&bytes)?
    };
    if set.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no training records",
            path.display()
        )));
    }
    Ok(set)
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Validation(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Flip a grid-oriented field into image order (north up) for export.
pub fn flip_rows(values: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    for image_row in 0..height {
        let row = height - 1 - image_row;
        out.extend_from_slice(&values[row * width..(row + 1) * width]);
    }
    out
}
