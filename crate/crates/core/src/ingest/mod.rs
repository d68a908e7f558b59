//! Tabular inputs: labelled rows with a protected-group id.
//!
//! Datasets come from CSV files ([`load_csv`]) or from seeded synthetic
//! populations ([`synth_generate`]), and are partitioned with a stratified
//! [`split`].

pub(crate) mod csv_io;
mod split;
mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{csv_header, load_csv, read_csv, write_csv, ColumnKind, CsvSchema, FeatureColumn};
pub use split::{split, Partition};
pub use synth::{synth_generate, GroupSynth, SynthSpec, SyntheticPopulation};

/// One labelled example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub features: Vec<f64>,
    pub label: bool,
    pub group: usize,
}

/// Feature rows with a binary label and a dense group id per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    rows: Vec<Row>,
    group_names: Vec<String>,
    feature_names: Vec<String>,
}

impl LabeledDataset {
    /// Validates and wraps rows. Requires at least two rows, at least two
    /// distinct groups present, in-range group ids and uniform feature width.
    pub fn new(rows: Vec<Row>, group_names: Vec<String>, feature_names: Vec<String>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 rows, got {}",
                rows.len()
            )));
        }
        let width = feature_names.len();
        let mut present = vec![false; group_names.len()];
        for (i, row) in rows.iter().enumerate() {
            if row.group >= group_names.len() {
                return Err(Error::InvalidDataset(format!(
                    "row {i}: group id {} out of range (G = {})",
                    row.group,
                    group_names.len()
                )));
            }
            if row.features.len() != width {
                return Err(Error::InvalidDataset(format!(
                    "row {i}: {} features, expected {width}",
                    row.features.len()
                )));
            }
            present[row.group] = true;
        }
        let found = present.iter().filter(|&&p| p).count();
        if found < 2 {
            return Err(Error::TooFewGroups { found });
        }
        Ok(Self {
            rows,
            group_names,
            feature_names,
        })
    }

    /// Builds a subset from row indices; the result keeps every group name
    /// but must itself satisfy the dataset invariants.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        Self::new(rows, self.group_names.clone(), self.feature_names.clone())
    }

    pub fn rows(&self) -> &[Row] {
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

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn num_groups(&self) -> usize {
        self.group_names.len()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = bool> + '_ {
        self.rows.iter().map(|r| r.label)
    }

    /// Fraction of rows labelled positive.
    pub fn positive_fraction(&self) -> f64 {
        let pos = self.rows.iter().filter(|r| r.label).count();
        pos as f64 / self.rows.len() as f64
    }

    /// Row count per group id.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.group_names.len()];
        for r in &self.rows {
            sizes[r.group] += 1;
        }
        sizes
    }

    /// Positive-label fraction per group id; `None` for groups with no rows.
    pub fn group_base_rates(&self) -> Vec<Option<f64>> {
        let mut pos = vec![0usize; self.group_names.len()];
        let mut n = vec![0usize; self.group_names.len()];
        for r in &self.rows {
            n[r.group] += 1;
            pos[r.group] += usize::from(r.label);
        }
        pos.iter()
            .zip(&n)
            .map(|(&p, &n)| (n > 0).then(|| p as f64 / n as f64))
            .collect()
    }
}
