//! Model fitting under Dirichlet-multinomial and Normal-Inverse-Wishart
//! conjugacy.
//!
//! [`fit_fixed_assignments`] computes posterior-mean parameters when every
//! record carries its latent assignments. [`fit_gibbs`] alternates between
//! sampling assignments under the current point estimates and refreshing
//! the point estimates, with a fixed number of clusters (no
//! stick-breaking); it returns the final-iteration point estimate and is
//! deterministic given the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{
    Hyperparameters, ModelError, PositionDistribution, SpatialConcept, SpatialConceptModel,
    TrainingSet, Vocabulary,
};
use crate::grid::Point2;
use crate::math::log_sum_exp;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("training set is empty")]
    EmptyData,

    #[error("record {index} is missing a {what} assignment")]
    MissingAssignment { index: usize, what: &'static str },

    #[error("{what} ids are not contiguous from 0: id {id} has no assigned records")]
    EmptyCluster { what: &'static str, id: usize },

    #[error("posterior degrees of freedom {df} too small for a covariance mean (need > 3)")]
    DegenerateDf { df: f64 },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("{what} must be at least 1")]
    BadCount { what: &'static str },
}

/// Dirichlet posterior mean: `(count + concentration) / (total + concentration * bins)`.
fn dirichlet_mean(counts: &[f64], concentration: f64) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    let bins = counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c + concentration) / (total + concentration * bins))
        .collect()
}

/// Normal-Inverse-Wishart posterior mean for one cluster of 2D points.
fn niw_posterior_mean(
    points: &[Point2],
    hyper: &Hyperparameters,
) -> Result<PositionDistribution, FitError> {
    let n = points.len() as f64;
    let mut sum = Point2::new(0.0, 0.0);
    for p in points {
        sum.x += p.x;
        sum.y += p.y;
    }
    let xbar = Point2::new(sum.x / n, sum.y / n);

    // scatter about the sample mean
    let mut scatter = [[0.0f64; 2]; 2];
    for p in points {
        let dx = p.x - xbar.x;
        let dy = p.y - xbar.y;
        scatter[0][0] += dx * dx;
        scatter[0][1] += dx * dy;
        scatter[1][0] += dy * dx;
        scatter[1][1] += dy * dy;
    }

    let kappa_n = hyper.kappa + n;
    let df_n = hyper.df + n;
    let mean_n = Point2::new(
        (hyper.kappa * hyper.mean.x + n * xbar.x) / kappa_n,
        (hyper.kappa * hyper.mean.y + n * xbar.y) / kappa_n,
    );
    let shrink = hyper.kappa * n / kappa_n;
    let dx = xbar.x - hyper.mean.x;
    let dy = xbar.y - hyper.mean.y;
    let mut scale_n = hyper.scale;
    for r in 0..2 {
        for c in 0..2 {
            scale_n[r][c] += scatter[r][c];
        }
    }
    scale_n[0][0] += shrink * dx * dx;
    scale_n[0][1] += shrink * dx * dy;
    scale_n[1][0] += shrink * dy * dx;
    scale_n[1][1] += shrink * dy * dy;

    // E[Sigma] under the inverse-Wishart posterior: scale / (df - D - 1)
    let denom = df_n - 3.0;
    if denom <= 0.0 {
        return Err(FitError::DegenerateDf { df: df_n });
    }
    let cov = [
        [scale_n[0][0] / denom, scale_n[0][1] / denom],
        [scale_n[1][0] / denom, scale_n[1][1] / denom],
    ];
    Ok(PositionDistribution { mean: mean_n, cov })
}

struct Assignments {
    concept: Vec<usize>,
    position: Vec<usize>,
    n_concepts: usize,
    n_positions: usize,
}

/// Point estimates from a full assignment. Empty position clusters fall
/// back to the prior mean and prior scale matrix so Gibbs sweeps can
/// still score them; the strict fitter rejects them beforehand.
fn estimate(
    data: &TrainingSet,
    vocab: &Vocabulary,
    asg: &Assignments,
    hyper: &Hyperparameters,
) -> Result<SpatialConceptModel, FitError> {
    let n_c = asg.n_concepts;
    let n_k = asg.n_positions;

    let mut concept_counts = vec![0.0f64; n_c];
    let mut word_counts = vec![vec![0.0f64; vocab.len()]; n_c];
    let mut pos_counts = vec![vec![0.0f64; n_k]; n_c];
    let mut cluster_points: Vec<Vec<Point2>> = vec![Vec::new(); n_k];

    for (t, r) in data.records.iter().enumerate() {
        let l = asg.concept[t];
        let k = asg.position[t];
        concept_counts[l] += 1.0;
        pos_counts[l][k] += 1.0;
        for w in &r.words {
            if let Some(id) = vocab.index_of(w) {
                word_counts[l][id] += 1.0;
            }
        }
        cluster_points[k].push(r.position);
    }

    let mixture = dirichlet_mean(&concept_counts, hyper.alpha);
    let concepts = (0..n_c)
        .map(|l| SpatialConcept {
            word_dist: dirichlet_mean(&word_counts[l], hyper.beta),
            position_dist: dirichlet_mean(&pos_counts[l], hyper.gamma),
        })
        .collect();

    let mut positions = Vec::with_capacity(n_k);
    for points in &cluster_points {
        if points.is_empty() {
            positions.push(PositionDistribution {
                mean: hyper.mean,
                cov: hyper.scale,
            });
        } else {
            positions.push(niw_posterior_mean(points, hyper)?);
        }
    }

    Ok(SpatialConceptModel {
        vocabulary: vocab.clone(),
        mixture,
        concepts,
        positions,
    })
}

/// Fit from data whose latent assignments are all supplied.
///
/// Ids must be contiguous from 0 for both concepts and position
/// distributions; a position id with no assigned records is an error
/// (its covariance mean would be undefined).
pub fn fit_fixed_assignments(
    data: &TrainingSet,
    hyper: &Hyperparameters,
) -> Result<SpatialConceptModel, FitError> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(FitError::EmptyData);
    }
    let mut concept = Vec::with_capacity(data.len());
    let mut position = Vec::with_capacity(data.len());
    for (index, r) in data.records.iter().enumerate() {
        concept.push(r.concept_id.ok_or(FitError::MissingAssignment {
            index,
            what: "concept",
        })?);
        position.push(r.position_id.ok_or(FitError::MissingAssignment {
            index,
            what: "position",
        })?);
    }
    let n_concepts = concept.iter().max().copied().unwrap_or(0) + 1;
    let n_positions = position.iter().max().copied().unwrap_or(0) + 1;
    for id in 0..n_concepts {
        if !concept.contains(&id) {
            return Err(FitError::EmptyCluster {
                what: "concept",
                id,
            });
        }
    }
    for id in 0..n_positions {
        if !position.contains(&id) {
            return Err(FitError::EmptyCluster {
                what: "position",
                id,
            });
        }
    }

    let vocab = data.vocabulary();
    let asg = Assignments {
        concept,
        position,
        n_concepts,
        n_positions,
    };
    let model = estimate(data, &vocab, &asg, hyper)?;
    model.validate()?;
    Ok(model)
}

fn sample_categorical(rng: &mut ChaCha8Rng, log_weights: &[f64]) -> usize {
    let norm = log_sum_exp(log_weights);
    if norm == f64::NEG_INFINITY {
        return 0;
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &lw) in log_weights.iter().enumerate() {
        acc += (lw - norm).exp();
        if u < acc {
            return i;
        }
    }
    log_weights.len() - 1
}

/// Fit by blocked Gibbs sampling with a fixed number of concepts and
/// position distributions.
pub fn fit_gibbs(
    data: &TrainingSet,
    hyper: &Hyperparameters,
    n_concepts: usize,
    n_positions: usize,
    iters: usize,
    seed: u64,
) -> Result<SpatialConceptModel, FitError> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(FitError::EmptyData);
    }
    if n_concepts == 0 {
        return Err(FitError::BadCount { what: "n_concepts" });
    }
    if n_positions == 0 {
        return Err(FitError::BadCount {
            what: "n_positions",
        });
    }
    if iters == 0 {
        return Err(FitError::BadCount { what: "iters" });
    }
    if n_positions > data.len() {
        log::warn!(
            "requested {n_positions} position distributions for {} records; \
             empty clusters will be dropped",
            data.len()
        );
    }

    let vocab = data.vocabulary();
    let bags: Vec<Vec<usize>> = data
        .records
        .iter()
        .map(|r| r.words.iter().filter_map(|w| vocab.index_of(w)).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut asg = Assignments {
        concept: (0..data.len())
            .map(|_| rng.gen_range(0..n_concepts))
            .collect(),
        position: (0..data.len())
            .map(|_| rng.gen_range(0..n_positions))
            .collect(),
        n_concepts,
        n_positions,
    };

    let mut pos_scores = vec![0.0f64; n_positions];
    let mut concept_scores = vec![0.0f64; n_concepts];
    for _ in 0..iters {
        let model = estimate(data, &vocab, &asg, hyper)?;
        let log_pi: Vec<f64> = model.mixture.iter().map(|p| p.ln()).collect();
        let log_phi: Vec<Vec<f64>> = model
            .concepts
            .iter()
            .map(|c| c.position_dist.iter().map(|p| p.ln()).collect())
            .collect();
        let log_w: Vec<Vec<f64>> = model
            .concepts
            .iter()
            .map(|c| c.word_dist.iter().map(|p| p.ln()).collect())
            .collect();

        // position assignments given concepts
        for t in 0..data.len() {
            let x = data.records[t].position;
            let l = asg.concept[t];
            for (k, score) in pos_scores.iter_mut().enumerate() {
                *score = model.positions[k].log_density(x) + log_phi[l][k];
            }
            asg.position[t] = sample_categorical(&mut rng, &pos_scores);
        }
        // concept assignments given positions
        for (t, bag) in bags.iter().enumerate() {
            let k = asg.position[t];
            for (l, score) in concept_scores.iter_mut().enumerate() {
                let words: f64 = bag.iter().map(|&w| log_w[l][w]).sum();
                *score = words + log_phi[l][k] + log_pi[l];
            }
            asg.concept[t] = sample_categorical(&mut rng, &concept_scores);
        }
    }

    // Final point estimate with empty position clusters dropped.
    let mut used: Vec<usize> = asg.position.clone();
    used.sort_unstable();
    used.dedup();
    if used.len() < n_positions {
        let remap: Vec<Option<usize>> = {
            let mut m = vec![None; n_positions];
            for (new, &old) in used.iter().enumerate() {
                m[old] = Some(new);
            }
            m
        };
        for p in asg.position.iter_mut() {
            *p = remap[*p].expect("used cluster must remap");
        }
        asg.n_positions = used.len();
    }
    let model = estimate(data, &vocab, &asg, hyper)?;
    model.validate()?;
    Ok(model)
}
