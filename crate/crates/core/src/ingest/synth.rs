//! Seeded two-class Gaussian populations.
//!
//! For each group, labels are Bernoulli(`positive_base_rate`) and the single
//! feature `x` is drawn from `Normal(score_mean_pos, score_spread)` for
//! positives and `Normal(score_mean_neg, score_spread)` for negatives. Because
//! the generating process is known, the posterior `P(y = 1 | x, group)` is
//! available in closed form and is returned as the latent score; those scores
//! are calibrated within every group by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{LabeledDataset, Row};
use crate::error::{Error, Result};
use crate::scorer::{clamp_score, ScoredDataset, ScoredRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSynth {
    pub name: String,
    pub size: usize,
    pub positive_base_rate: f64,
    pub score_mean_pos: f64,
    pub score_mean_neg: f64,
    pub score_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub groups: Vec<GroupSynth>,
    pub seed: u64,
}

impl SynthSpec {
    /// Two groups sharing one score model but with different base rates
    /// (0.40 vs 0.15), so an accuracy-maximizing classifier selects the first
    /// group far more often.
    pub fn base_rate_gap(seed: u64) -> Self {
        Self {
            groups: vec![
                GroupSynth {
                    name: "advantaged".into(),
                    size: 600,
                    positive_base_rate: 0.40,
                    score_mean_pos: 1.0,
                    score_mean_neg: -1.0,
                    score_spread: 1.0,
                },
                GroupSynth {
                    name: "disadvantaged".into(),
                    size: 400,
                    positive_base_rate: 0.15,
                    score_mean_pos: 1.0,
                    score_mean_neg: -1.0,
                    score_spread: 1.0,
                },
            ],
            seed,
        }
    }

    /// Two equal groups with the same (low) prevalence.
    pub fn rare_event(prevalence: f64, total: usize, seed: u64) -> Self {
        let group = |name: &str, size| GroupSynth {
            name: name.into(),
            size,
            positive_base_rate: prevalence,
            score_mean_pos: 1.0,
            score_mean_neg: -1.0,
            score_spread: 1.0,
        };
        Self {
            groups: vec![group("a", total / 2), group("b", total - total / 2)],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 groups, got {}",
                self.groups.len()
            )));
        }
        for (i, g) in self.groups.iter().enumerate() {
            let fail = |msg: String| Err(Error::InvalidSpec(format!("group {i} ({}): {msg}", g.name)));
            if g.size == 0 {
                return fail("size must be at least 1".into());
            }
            if !(g.positive_base_rate > 0.0 && g.positive_base_rate < 1.0) {
                return fail(format!(
                    "base rate {} must lie strictly inside (0, 1)",
                    g.positive_base_rate
                ));
            }
            if !(g.score_mean_pos.is_finite() && g.score_mean_neg.is_finite()) {
                return fail("score means must be finite".into());
            }
            if g.score_mean_pos <= g.score_mean_neg {
                return fail(format!(
                    "score_mean_pos ({}) must exceed score_mean_neg ({})",
                    g.score_mean_pos, g.score_mean_neg
                ));
            }
            if !(g.score_spread > 0.0 && g.score_spread.is_finite()) {
                return fail(format!("score_spread {} must be positive", g.score_spread));
            }
        }
        Ok(())
    }
}

/// A generated dataset plus the Bayes-posterior score of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPopulation {
    pub dataset: LabeledDataset,
    pub latent_scores: Vec<f64>,
}

impl SyntheticPopulation {
    /// The latent scores paired with labels and groups.
    pub fn scored(&self) -> ScoredDataset {
        let rows = self
            .dataset
            .rows()
            .iter()
            .zip(&self.latent_scores)
            .map(|(r, &score)| ScoredRow {
                score,
                label: r.label,
                group: r.group,
            })
            .collect();
        ScoredDataset::new(rows, self.dataset.group_names().to_vec())
            .expect("synthetic scores satisfy the scored-dataset invariants")
    }
}

/// Generates a population; a pure function of `spec`.
pub fn synth_generate(spec: &SynthSpec) -> Result<SyntheticPopulation> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total: usize = spec.groups.iter().map(|g| g.size).sum();
    let mut rows = Vec::with_capacity(total);
    let mut latent = Vec::with_capacity(total);
    for (gid, g) in spec.groups.iter().enumerate() {
        let prior_logit = (g.positive_base_rate / (1.0 - g.positive_base_rate)).ln();
        let var2 = 2.0 * g.score_spread * g.score_spread;
        for _ in 0..g.size {
            let label = rng.random::<f64>() < g.positive_base_rate;
            let z: f64 = rng.sample(StandardNormal);
            let mean = if label { g.score_mean_pos } else { g.score_mean_neg };
            let x = mean + g.score_spread * z;
            let log_lr = ((x - g.score_mean_neg).powi(2) - (x - g.score_mean_pos).powi(2)) / var2;
            let score = clamp_score(1.0 / (1.0 + (-(prior_logit + log_lr)).exp()));
            rows.push(Row {
                features: vec![x],
                label,
                group: gid,
            });
            latent.push(score);
        }
    }
    let names = spec.groups.iter().map(|g| g.name.clone()).collect();
    let dataset = LabeledDataset::new(rows, names, vec!["x".into()])?;
    Ok(SyntheticPopulation {
        dataset,
        latent_scores: latent,
    })
}
