//! The spatial place model: a mixture of place categories, each pairing a
//! word multinomial with a multinomial over shared 2D Gaussian position
//! distributions.
//!
//! Models are immutable once fitted and cheap to share across threads.

mod field;
mod fit;
mod io;

pub use field::{
    data_log_likelihood, emission_log_at, emission_log_field, emission_log_field_seq,
    model_position_score, reward_field, word_likelihood, ScalarField,
};
pub use fit::{fit_fixed_assignments, fit_gibbs, FitError};
pub use io::{load_model, save_model, ModelIoError, MODEL_FORMAT, MODEL_VERSION};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Point2;
use crate::math::mat2;

/// Tolerance for "sums to one" checks on stored multinomials.
pub const MULTINOMIAL_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate word in vocabulary: {0:?}")]
    DuplicateWord(String),

    #[error("vocabulary is empty")]
    EmptyVocabulary,

    #[error("{what} must sum to 1 (got {sum})")]
    NotNormalized { what: String, sum: f64 },

    #[error("{what} has a negative or non-finite entry")]
    BadProbability { what: String },

    #[error("covariance of position distribution {index} is not symmetric positive-definite")]
    BadCovariance { index: usize },

    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: String,
        got: usize,
        expected: usize,
    },

    #[error("invalid hyperparameters: {0}")]
    BadHyperparameters(String),
}

#[derive(Debug, Error)]
pub enum InstructionError {
    #[error("instruction has no words")]
    Empty,

    #[error("no instruction word is in the vocabulary (ignored: {0:?})")]
    AllOutOfVocabulary(Vec<String>),
}

/// Ordered, duplicate-free word list with index lookup.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new<I, S>(words: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary::default();
        for w in words {
            let w: String = w.into();
            if v.index.contains_key(&w) {
                return Err(ModelError::DuplicateWord(w));
            }
            v.push(w);
        }
        Ok(v)
    }

    fn push(&mut self, word: String) -> usize {
        let id = self.words.len();
        self.index.insert(word.clone(), id);
        self.words.push(word);
        id
    }

    /// Index of `word`, inserting it at the end when unseen.
    pub fn intern(&mut self, word: &str) -> usize {
        match self.index.get(word) {
            Some(&id) => id,
            None => self.push(word.to_string()),
        }
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// One 2D Gaussian over world coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionDistribution {
    pub mean: Point2,
    /// 2×2 symmetric positive-definite covariance, meters².
    pub cov: [[f64; 2]; 2],
}

impl PositionDistribution {
    pub fn new(mean: Point2, cov: [[f64; 2]; 2]) -> Result<Self, ModelError> {
        let pd = Self { mean, cov };
        if !mat2::is_spd(&pd.cov, 1e-9) {
            return Err(ModelError::BadCovariance { index: 0 });
        }
        Ok(pd)
    }

    /// Log density of the Gaussian at `p`.
    pub fn log_density(&self, p: Point2) -> f64 {
        let inv = mat2::inverse(&self.cov);
        let dx = p.x - self.mean.x;
        let dy = p.y - self.mean.y;
        let quad = dx * (inv[0][0] * dx + inv[0][1] * dy) + dy * (inv[1][0] * dx + inv[1][1] * dy);
        -(2.0 * std::f64::consts::PI).ln() - 0.5 * mat2::det(&self.cov).ln() - 0.5 * quad
    }
}

/// One place category: a word multinomial plus a multinomial over the
/// model's shared position distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialConcept {
    /// Probability per vocabulary word.
    pub word_dist: Vec<f64>,
    /// Probability per position-distribution index.
    pub position_dist: Vec<f64>,
}

/// The full fitted model.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialConceptModel {
    pub vocabulary: Vocabulary,
    /// Mixture weight per concept.
    pub mixture: Vec<f64>,
    pub concepts: Vec<SpatialConcept>,
    pub positions: Vec<PositionDistribution>,
}

fn check_multinomial(what: &str, probs: &[f64]) -> Result<(), ModelError> {
    if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(ModelError::BadProbability {
            what: what.to_string(),
        });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > MULTINOMIAL_SUM_TOL {
        return Err(ModelError::NotNormalized {
            what: what.to_string(),
            sum,
        });
    }
    Ok(())
}

impl SpatialConceptModel {
    /// Enforce the structural invariants: normalized multinomials,
    /// consistent lengths, SPD covariances, non-empty vocabulary.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.vocabulary.is_empty() {
            return Err(ModelError::EmptyVocabulary);
        }
        check_multinomial("pi", &self.mixture)?;
        if self.mixture.len() != self.concepts.len() {
            return Err(ModelError::LengthMismatch {
                what: "pi".into(),
                got: self.mixture.len(),
                expected: self.concepts.len(),
            });
        }
        for (l, c) in self.concepts.iter().enumerate() {
            if c.word_dist.len() != self.vocabulary.len() {
                return Err(ModelError::LengthMismatch {
                    what: format!("concepts[{l}].W"),
                    got: c.word_dist.len(),
                    expected: self.vocabulary.len(),
                });
            }
            if c.position_dist.len() != self.positions.len() {
                return Err(ModelError::LengthMismatch {
                    what: format!("concepts[{l}].phi"),
                    got: c.position_dist.len(),
                    expected: self.positions.len(),
                });
            }
            check_multinomial(&format!("concepts[{l}].W"), &c.word_dist)?;
            check_multinomial(&format!("concepts[{l}].phi"), &c.position_dist)?;
        }
        for (k, p) in self.positions.iter().enumerate() {
            if !mat2::is_spd(&p.cov, 1e-9) {
                return Err(ModelError::BadCovariance { index: k });
            }
        }
        Ok(())
    }

    pub fn n_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn n_positions(&self) -> usize {
        self.positions.len()
    }
}

/// Dirichlet and Normal-Inverse-Wishart prior settings.
///
/// Defaults follow a common indoor configuration: unit concentrations on
/// the mixture and position assignments, light smoothing on words, a
/// vague position prior centered at the world origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Mixture concentration.
    pub alpha: f64,
    /// Position-assignment concentration.
    pub gamma: f64,
    /// Word concentration.
    pub beta: f64,
    /// Image-feature concentration; carried for completeness, unused by
    /// the fitters here (no image channel).
    pub chi: f64,
    /// Prior mean of position-distribution means.
    pub mean: Point2,
    /// Prior pseudo-count on the mean.
    pub kappa: f64,
    /// Prior degrees of freedom; must exceed dimension - 1 = 1.
    pub df: f64,
    /// Prior scale matrix.
    pub scale: [[f64; 2]; 2],
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma: 1.0,
            beta: 0.1,
            chi: 0.1,
            mean: Point2::new(0.0, 0.0),
            kappa: 0.001,
            df: 3.0,
            scale: [[2.0, 0.0], [0.0, 2.0]],
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("chi", self.chi),
            ("kappa", self.kappa),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(ModelError::BadHyperparameters(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !self.df.is_finite() || self.df <= 1.0 {
            return Err(ModelError::BadHyperparameters(format!(
                "df must exceed 1, got {}",
                self.df
            )));
        }
        if !mat2::is_spd(&self.scale, 1e-9) {
            return Err(ModelError::BadHyperparameters(
                "scale matrix is not symmetric positive-definite".into(),
            ));
        }
        Ok(())
    }
}

/// Bag-of-words counts over a model's vocabulary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    /// One count per vocabulary word.
    counts: Vec<u32>,
    total: u32,
}

impl Instruction {
    /// Build from raw words; out-of-vocabulary words are dropped and
    /// returned so callers can warn. All-out-of-vocabulary input is an
    /// error.
    pub fn from_words<S: AsRef<str>>(
        vocab: &Vocabulary,
        words: &[S],
    ) -> Result<(Self, Vec<String>), InstructionError> {
        if words.is_empty() {
            return Err(InstructionError::Empty);
        }
        let mut counts = vec![0u32; vocab.len()];
        let mut ignored = Vec::new();
        let mut total = 0u32;
        for w in words {
            match vocab.index_of(w.as_ref()) {
                Some(id) => {
                    counts[id] += 1;
                    total += 1;
                }
                None => ignored.push(w.as_ref().to_string()),
            }
        }
        if total == 0 {
            return Err(InstructionError::AllOutOfVocabulary(ignored));
        }
        Ok((Self { counts, total }, ignored))
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    /// Vocabulary indices with a positive count.
    pub fn present_words(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
    }
}

/// One training observation: where the robot stood and what was said.
///
/// JSON form is flat, matching the CSV columns:
/// `{"x": .., "y": .., "words": [..], "c_id": .., "i_id": ..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "FlatRecord", into = "FlatRecord")]
pub struct TrainingRecord {
    pub position: Point2,
    pub words: Vec<String>,
    /// Concept assignment when known.
    pub concept_id: Option<usize>,
    /// Position-distribution assignment when known.
    pub position_id: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct FlatRecord {
    x: f64,
    y: f64,
    words: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    i_id: Option<usize>,
}

impl From<FlatRecord> for TrainingRecord {
    fn from(r: FlatRecord) -> Self {
        Self {
            position: Point2::new(r.x, r.y),
            words: r.words,
            concept_id: r.c_id,
            position_id: r.i_id,
        }
    }
}

impl From<TrainingRecord> for FlatRecord {
    fn from(r: TrainingRecord) -> Self {
        Self {
            x: r.position.x,
            y: r.position.y,
            words: r.words,
            c_id: r.concept_id,
            i_id: r.position_id,
        }
    }
}

/// A fit dataset.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrainingSet {
    pub records: Vec<TrainingRecord>,
}

#[derive(Debug, Error)]
pub enum TrainingDataError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("record {index}: {message}")]
    BadRecord { index: usize, message: String },
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    x: f64,
    y: f64,
    words: String,
    #[serde(default)]
    c_id: Option<usize>,
    #[serde(default)]
    i_id: Option<usize>,
}

impl TrainingSet {
    /// Parse CSV with header `x,y,words[,c_id,i_id]`; `words` holds
    /// space-separated tokens.
    pub fn from_csv(bytes: &[u8]) -> Result<Self, TrainingDataError> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(false)
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let mut records = Vec::new();
        for (index, row) in reader.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            let words: Vec<String> = row.words.split_whitespace().map(String::from).collect();
            if words.is_empty() {
                return Err(TrainingDataError::BadRecord {
                    index,
                    message: "empty word list".into(),
                });
            }
            if !row.x.is_finite() || !row.y.is_finite() {
                return Err(TrainingDataError::BadRecord {
                    index,
                    message: format!("non-finite position ({}, {})", row.x, row.y),
                });
            }
            records.push(TrainingRecord {
                position: Point2::new(row.x, row.y),
                words,
                concept_id: row.c_id,
                position_id: row.i_id,
            });
        }
        Ok(Self { records })
    }

    /// Serialize to the CSV schema accepted by [`TrainingSet::from_csv`].
    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = String::from("x,y,words,c_id,i_id\n");
        for r in &self.records {
            let ids = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.position.x,
                r.position.y,
                r.words.join(" "),
                ids(r.concept_id),
                ids(r.position_id),
            ));
        }
        out.into_bytes()
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, TrainingDataError> {
        let records: Vec<TrainingRecord> = serde_json::from_slice(bytes)?;
        Ok(Self { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Vocabulary over all words, ordered by first appearance.
    pub fn vocabulary(&self) -> Vocabulary {
        let mut v = Vocabulary::default();
        for r in &self.records {
            for w in &r.words {
                v.intern(w);
            }
        }
        v
    }
}
