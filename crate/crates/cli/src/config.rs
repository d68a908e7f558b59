//! Run configuration: a flat JSON file whose keys match the long flags
//! (with `-` replaced by `_`). Flags override file values.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use levelup_core::{FairnessMeasure, Statistic};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "LEVELUP_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "levelup-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Two groups with base rates 0.40 and 0.15.
    BaseRateGap,
    /// Two equal groups sharing a low prevalence.
    RareEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SplitChoice {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    None,
    Dp,
    Eo,
    Pp,
    Fpr,
    Eodds,
    Cuae,
    Oae,
    MinRate,
    MaxRate,
    /// Raise trailing groups to the best group's unconstrained `--stat`.
    LevelUp,
    /// Raise trailing groups to their equality-enforced `--measure` level.
    PartialLevelUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FrontierMode {
    Equality,
    MinRate,
}

/// Every setting of a run. All fields are optional so a config file and the
/// command line can each supply part of it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Labelled CSV input
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Generate a synthetic population instead of reading a CSV
    #[arg(long, value_enum)]
    pub synth: Option<SynthKind>,
    /// Pre-computed `score,label,group` CSV
    #[arg(long)]
    pub scores: Option<PathBuf>,

    /// Label column [default: label]
    #[arg(long)]
    pub label_column: Option<String>,
    /// Label value counted as positive [default: 1]
    #[arg(long)]
    pub positive_label: Option<String>,
    /// Group column [default: group]
    #[arg(long)]
    pub group_column: Option<String>,
    /// Comma-separated feature columns [default: every column except the label]
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,

    /// Fraction of each (group, label) cell held out [default: 0.3]
    #[arg(long)]
    pub eval_fraction: Option<f64>,
    /// Split that enforcement and reports use [default: train]
    #[arg(long, value_enum)]
    pub evaluate_on: Option<SplitChoice>,

    /// Scorer step size [default: 1.0]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Scorer iteration cap [default: 20000]
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Scorer L2 penalty [default: 0.0001]
    #[arg(long)]
    pub l2: Option<f64>,

    /// Synthetic prevalence for `--synth rare-event` [default: 0.01]
    #[arg(long)]
    pub prevalence: Option<f64>,
    /// Synthetic row count for `--synth rare-event` [default: 10000]
    #[arg(long)]
    pub rows: Option<usize>,

    /// Constraint for `enforce`
    #[arg(long, value_enum)]
    pub constraint: Option<ConstraintKind>,
    /// Disparity bound for equality constraints
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Statistic for rate constraints and level-up [default: selection_rate]
    #[arg(long)]
    pub stat: Option<Statistic>,
    /// Minimum rate
    #[arg(long)]
    pub tau: Option<f64>,
    /// Maximum selection rate
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Frontier kind [default: equality]
    #[arg(long, value_enum)]
    pub mode: Option<FrontierMode>,
    /// Measure for equality frontiers and partial level-up [default: demographic_parity]
    #[arg(long)]
    pub measure: Option<FairnessMeasure>,
    /// Sweep points per frontier [default: 50]
    #[arg(long)]
    pub resolution: Option<usize>,

    /// Levelling-down tolerance [default: 0.005]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Policy JSON to audit
    #[arg(long)]
    pub policy: Option<PathBuf>,

    /// Output directory [default: $LEVELUP_OUT_DIR, then levelup-out]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Seed for the split, scorer initialisation and synthetic data (required)
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlay(self, flags: RunConfig) -> Self {
        let mut base = serde_json::to_value(self).expect("config serializes");
        let over = serde_json::to_value(flags).expect("config serializes");
        for (key, value) in over.as_object().expect("object") {
            if !value.is_null() {
                base[key] = value.clone();
            }
        }
        serde_json::from_value(base).expect("overlay of valid configs is valid")
    }

    /// Fills the output directory from the environment and checks the invariants.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if self.out_dir.is_none() {
            self.out_dir =
                Some(std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from));
        }
        if self.seed.is_none() {
            return Err(CliError::Usage(
                "a seed is required (--seed or \"seed\" in the config)".into(),
            ));
        }
        let sources = [self.data.is_some(), self.synth.is_some(), self.scores.is_some()];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(CliError::Usage(
                "exactly one of --data, --synth or --scores must be given".into(),
            ));
        }
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("resolved config has a seed")
    }

    pub fn out_dir(&self) -> &Path {
        self.out_dir
            .as_deref()
            .expect("resolved config has an output directory")
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut copy = self.clone();
        copy.out_dir = None;
        let bytes = serde_json::to_vec(&copy).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
