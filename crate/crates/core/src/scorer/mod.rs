//! Probability scores: a logistic-regression scorer trained by gradient
//! descent, the scored-row container every enforcement step consumes, and
//! calibration measurement.

mod calibration;
mod objective;
mod scores_csv;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::LabeledDataset;

pub use calibration::{calibration_table, CalibrationBin, CalibrationTable};
pub use objective::LogisticObjective;
pub use scores_csv::{load_scores, read_scores, save_scores, write_scores};

/// Predicted scores are clamped to `[SCORE_EPSILON, 1 - SCORE_EPSILON]`.
pub const SCORE_EPSILON: f64 = 1e-12;

pub fn clamp_score(p: f64) -> f64 {
    p.clamp(SCORE_EPSILON, 1.0 - SCORE_EPSILON)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredRow {
    pub score: f64,
    pub label: bool,
    pub group: usize,
}

/// `(score, label, group)` triples. Scores are finite and in `[0, 1]`, and
/// every named group has at least one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDataset {
    rows: Vec<ScoredRow>,
    group_names: Vec<String>,
}

impl ScoredDataset {
    pub fn new(rows: Vec<ScoredRow>, group_names: Vec<String>) -> Result<Self> {
        if group_names.len() < 2 {
            return Err(Error::TooFewGroups {
                found: group_names.len(),
            });
        }
        let mut sizes = vec![0usize; group_names.len()];
        for (i, r) in rows.iter().enumerate() {
            if !(r.score.is_finite() && (0.0..=1.0).contains(&r.score)) {
                return Err(Error::InvalidDataset(format!(
                    "row {i}: score {} outside [0, 1]",
                    r.score
                )));
            }
            if r.group >= group_names.len() {
                return Err(Error::InvalidDataset(format!(
                    "row {i}: group id {} out of range",
                    r.group
                )));
            }
            sizes[r.group] += 1;
        }
        if let Some(g) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidDataset(format!("group `{}` has no rows", group_names[g])));
        }
        Ok(Self { rows, group_names })
    }

    pub fn rows(&self) -> &[ScoredRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn num_groups(&self) -> usize {
        self.group_names.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.group_names.len()];
        for r in &self.rows {
            sizes[r.group] += 1;
        }
        sizes
    }

    /// Rows of one group, in input order.
    pub fn group_rows(&self, group: usize) -> impl Iterator<Item = &ScoredRow> + '_ {
        self.rows.iter().filter(move |r| r.group == group)
    }

    pub fn positive_fraction(&self) -> f64 {
        self.rows.iter().filter(|r| r.label).count() as f64 / self.rows.len() as f64
    }

    /// Keeps only the listed rows (indices into this dataset).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.rows[i]).collect(),
            self.group_names.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    /// Initial step size; each iteration backtracks (Armijo) from the last accepted step.
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub l2: f64,
    /// Seeds the small random initial weights.
    pub seed: u64,
    /// Stop once the loss decreases by less than this in one iteration.
    pub tolerance: f64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            max_iterations: 20_000,
            l2: 1e-4,
            seed: 0,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub scale: f64,
}

/// A fitted logistic model. `weights[0]` is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorer {
    pub weights: Vec<f64>,
    pub config: ScorerConfig,
    pub standardization: Vec<Standardization>,
    pub feature_names: Vec<String>,
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
}

impl Scorer {
    pub fn num_features(&self) -> usize {
        self.standardization.len()
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.standardization)
            .map(|(v, s)| (v - s.mean) / s.scale)
            .collect()
    }

    /// Score for one raw feature vector.
    pub fn score(&self, x: &[f64]) -> f64 {
        let z = self.standardize(x);
        let margin = self.weights[0] + self.weights[1..].iter().zip(&z).map(|(w, v)| w * v).sum::<f64>();
        clamp_score(objective::sigmoid(margin))
    }
}

fn standardization_of(data: &LabeledDataset) -> Vec<Standardization> {
    let n = data.len() as f64;
    (0..data.num_features())
        .map(|j| {
            let mean = data.rows().iter().map(|r| r.features[j]).sum::<f64>() / n;
            let var = data.rows().iter().map(|r| (r.features[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            Standardization {
                mean,
                scale: if sd > 1e-12 { sd } else { 1.0 },
            }
        })
        .collect()
}

/// Builds the standardized objective for `data` using its own feature moments.
pub fn objective_for(data: &LabeledDataset, l2: f64) -> (LogisticObjective, Vec<Standardization>) {
    let std = standardization_of(data);
    let rows = data
        .rows()
        .iter()
        .map(|r| {
            r.features
                .iter()
                .zip(&std)
                .map(|(v, s)| (v - s.mean) / s.scale)
                .collect()
        })
        .collect();
    (LogisticObjective::new(rows, data.labels().collect(), l2), std)
}

/// Fits by full-batch gradient descent with backtracking line search.
pub fn fit(train: &LabeledDataset, config: &ScorerConfig) -> Result<Scorer> {
    let positives = train.labels().filter(|&l| l).count();
    if positives == 0 || positives == train.len() {
        return Err(Error::SingleClass {
            label: u8::from(positives > 0),
        });
    }
    if !(config.learning_rate > 0.0 && config.l2 >= 0.0 && config.tolerance >= 0.0) {
        return Err(Error::InvalidSpec(
            "scorer config needs learning_rate > 0, l2 >= 0, tolerance >= 0".into(),
        ));
    }
    let (objective, standardization) = objective_for(train, config.l2);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w: Vec<f64> = (0..objective.dim()).map(|_| rng.random_range(-0.01..0.01)).collect();

    let mut loss = objective.loss(&w);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { iteration: 0 });
    }
    let mut step = config.learning_rate;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=config.max_iterations {
        iterations = it;
        let g = objective.gradient(&w);
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 == 0.0 {
            converged = true;
            break;
        }
        let (candidate, next_loss) = loop {
            let candidate: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect();
            let next_loss = objective.loss(&candidate);
            if next_loss.is_finite() && next_loss <= loss - 0.5 * step * g2 {
                break (candidate, next_loss);
            }
            step *= 0.5;
            if step < 1e-20 {
                if !next_loss.is_finite() {
                    return Err(Error::NonFiniteLoss { iteration: it });
                }
                break (w.clone(), loss);
            }
        };
        let decrease = loss - next_loss;
        w = candidate;
        loss = next_loss;
        if decrease < config.tolerance {
            converged = true;
            break;
        }
        step = (step * 2.0).min(config.learning_rate * 1e3);
    }

    Ok(Scorer {
        weights: w,
        config: *config,
        standardization,
        feature_names: train.feature_names().to_vec(),
        iterations,
        converged,
        final_loss: loss,
    })
}

/// Scores every row, preserving order.
pub fn predict(scorer: &Scorer, data: &LabeledDataset) -> Result<ScoredDataset> {
    if data.num_features() != scorer.num_features() {
        return Err(Error::DimensionMismatch {
            expected: scorer.num_features(),
            found: data.num_features(),
        });
    }
    let rows = data
        .rows()
        .iter()
        .map(|r| ScoredRow {
            score: scorer.score(&r.features),
            label: r.label,
            group: r.group,
        })
        .collect();
    ScoredDataset::new(rows, data.group_names().to_vec())
}
