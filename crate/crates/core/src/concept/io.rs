//! Versioned JSON model files.
//!
//! The schema is self-describing:
//!
//! ```json
//! {
//!   "format": "spatial-concept-model",
//!   "version": 1,
//!   "vocabulary": ["kitchen", "bedroom"],
//!   "pi": [0.5, 0.5],
//!   "concepts": [{"W": [...], "phi": [...]}, ...],
//!   "positions": [{"mu": [x, y], "sigma": [[a, b], [c, d]]}, ...]
//! }
//! ```
//!
//! Loading validates every model invariant, so a file that parses but
//! breaks normalization or shape is rejected with the offending field.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ModelError, PositionDistribution, SpatialConcept, SpatialConceptModel, Vocabulary};
use crate::grid::Point2;

pub const MODEL_FORMAT: &str = "spatial-concept-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("not a model file: format {0:?}")]
    WrongFormat(String),

    #[error("unsupported model version {got} (this build reads version {expected})")]
    VersionMismatch { got: u32, expected: u32 },

    #[error(transparent)]
    Invalid(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
struct ConceptRecord {
    #[serde(rename = "W")]
    word_dist: Vec<f64>,
    #[serde(rename = "phi")]
    position_dist: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PositionRecord {
    mu: [f64; 2],
    sigma: [[f64; 2]; 2],
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    vocabulary: Vec<String>,
    pi: Vec<f64>,
    concepts: Vec<ConceptRecord>,
    positions: Vec<PositionRecord>,
}

/// Serialize a model; the output is deterministic for a given model.
pub fn save_model(model: &SpatialConceptModel) -> Vec<u8> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        vocabulary: model.vocabulary.words().to_vec(),
        pi: model.mixture.clone(),
        concepts: model
            .concepts
            .iter()
            .map(|c| ConceptRecord {
                word_dist: c.word_dist.clone(),
                position_dist: c.position_dist.clone(),
            })
            .collect(),
        positions: model
            .positions
            .iter()
            .map(|p| PositionRecord {
                mu: [p.mean.x, p.mean.y],
                sigma: p.cov,
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file).expect("model serializes");
    bytes.push(b'\n');
    bytes
}

/// Parse and validate a model file.
pub fn load_model(bytes: &[u8]) -> Result<SpatialConceptModel, ModelIoError> {
    let file: ModelFile = serde_json::from_slice(bytes)?;
    if file.format != MODEL_FORMAT {
        return Err(ModelIoError::WrongFormat(file.format));
    }
    if file.version != MODEL_VERSION {
        return Err(ModelIoError::VersionMismatch {
            got: file.version,
            expected: MODEL_VERSION,
        });
    }
    let model = SpatialConceptModel {
        vocabulary: Vocabulary::new(file.vocabulary)?,
        mixture: file.pi,
        concepts: file
            .concepts
            .into_iter()
            .map(|c| SpatialConcept {
                word_dist: c.word_dist,
                position_dist: c.position_dist,
            })
            .collect(),
        positions: file
            .positions
            .into_iter()
            .map(|p| PositionDistribution {
                mean: Point2::new(p.mu[0], p.mu[1]),
                cov: p.sigma,
            })
            .collect(),
    };
    model.validate()?;
    Ok(model)
}
