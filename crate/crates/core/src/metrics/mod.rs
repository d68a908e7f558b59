//! Per-group confusion statistics and disparity.
//!
//! Every ratio is `Option<f64>`: a `0/0` is `None` (undefined) and is never
//! coerced to a number. A row is a positive decision iff `score >= threshold`.

mod measure;

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::policy::ThresholdPolicy;
use crate::scorer::ScoredDataset;

pub use measure::{FairnessMeasure, HarmDirection, HarmProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    SelectionRate,
    Tpr,
    Fnr,
    Tnr,
    Fpr,
    Precision,
    Npv,
    Accuracy,
    FnFpRatio,
}

impl Statistic {
    pub const ALL: [Statistic; 9] = [
        Statistic::SelectionRate,
        Statistic::Tpr,
        Statistic::Fnr,
        Statistic::Tnr,
        Statistic::Fpr,
        Statistic::Precision,
        Statistic::Npv,
        Statistic::Accuracy,
        Statistic::FnFpRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::SelectionRate => "selection_rate",
            Statistic::Tpr => "tpr",
            Statistic::Fnr => "fnr",
            Statistic::Tnr => "tnr",
            Statistic::Fpr => "fpr",
            Statistic::Precision => "precision",
            Statistic::Npv => "npv",
            Statistic::Accuracy => "accuracy",
            Statistic::FnFpRatio => "fn_fp_ratio",
        }
    }

    /// Evaluates the statistic on raw counts.
    pub fn of(self, c: &Confusion) -> Option<f64> {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        match self {
            Statistic::SelectionRate => ratio(c.tp + c.fp, c.size()),
            Statistic::Tpr => ratio(c.tp, c.tp + c.fn_),
            Statistic::Fnr => ratio(c.fn_, c.tp + c.fn_),
            Statistic::Tnr => ratio(c.tn, c.tn + c.fp),
            Statistic::Fpr => ratio(c.fp, c.tn + c.fp),
            Statistic::Precision => ratio(c.tp, c.tp + c.fp),
            Statistic::Npv => ratio(c.tn, c.tn + c.fn_),
            Statistic::Accuracy => ratio(c.tp + c.tn, c.size()),
            // fn > 0 with fp = 0 would be +inf; reported as undefined as well
            Statistic::FnFpRatio => ratio(c.fn_, c.fp),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        let alias = match key.as_str() {
            "recall" => "tpr",
            "specificity" => "tnr",
            "ppv" => "precision",
            "positive_rate" | "decision_rate" => "selection_rate",
            other => other,
        };
        Statistic::ALL
            .into_iter()
            .find(|st| st.as_str() == alias)
            .ok_or_else(|| format!("unknown statistic `{s}`"))
    }
}

/// Confusion counts for one group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn size(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub group_names: Vec<String>,
    pub groups: Vec<Confusion>,
}

impl ConfusionCounts {
    pub fn correct(&self) -> usize {
        self.groups.iter().map(Confusion::correct).sum()
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(Confusion::size).sum()
    }

    /// Pooled accuracy over all groups.
    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }
}

/// Tallies decisions per group under `policy`.
pub fn confusion(scored: &ScoredDataset, policy: &ThresholdPolicy) -> Result<ConfusionCounts> {
    let thresholds = policy.thresholds();
    if thresholds.len() < scored.num_groups() {
        return Err(Error::MissingGroup {
            group: thresholds.len(),
        });
    }
    let mut groups = vec![Confusion::default(); scored.num_groups()];
    for r in scored.rows() {
        let c = &mut groups[r.group];
        match (r.score >= thresholds[r.group], r.label) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(ConfusionCounts {
        group_names: scored.group_names().to_vec(),
        groups,
    })
}

/// Derived statistics for one group.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GroupStats {
    pub name: String,
    pub counts: Confusion,
    pub selection_rate: Option<f64>,
    pub tpr: Option<f64>,
    pub fnr: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
    pub precision: Option<f64>,
    pub npv: Option<f64>,
    pub accuracy: Option<f64>,
    pub fn_fp_ratio: Option<f64>,
}

impl GroupStats {
    pub fn from_counts(name: impl Into<String>, counts: Confusion) -> Self {
        Self {
            name: name.into(),
            counts,
            selection_rate: Statistic::SelectionRate.of(&counts),
            tpr: Statistic::Tpr.of(&counts),
            fnr: Statistic::Fnr.of(&counts),
            tnr: Statistic::Tnr.of(&counts),
            fpr: Statistic::Fpr.of(&counts),
            precision: Statistic::Precision.of(&counts),
            npv: Statistic::Npv.of(&counts),
            accuracy: Statistic::Accuracy.of(&counts),
            fn_fp_ratio: Statistic::FnFpRatio.of(&counts),
        }
    }

    pub fn get(&self, stat: Statistic) -> Option<f64> {
        match stat {
            Statistic::SelectionRate => self.selection_rate,
            Statistic::Tpr => self.tpr,
            Statistic::Fnr => self.fnr,
            Statistic::Tnr => self.tnr,
            Statistic::Fpr => self.fpr,
            Statistic::Precision => self.precision,
            Statistic::Npv => self.npv,
            Statistic::Accuracy => self.accuracy,
            Statistic::FnFpRatio => self.fn_fp_ratio,
        }
    }

    pub fn size(&self) -> usize {
        self.counts.size()
    }
}

/// Writes each statistic as a number (or `null`) next to a `<name>_undefined` flag.
impl Serialize for GroupStats {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(3 + 2 * Statistic::ALL.len()))?;
        map.serialize_entry("name", &self.name)?;
        map.serialize_entry("size", &self.size())?;
        map.serialize_entry("counts", &self.counts)?;
        for stat in Statistic::ALL {
            let value = self.get(stat);
            map.serialize_entry(stat.as_str(), &value)?;
            map.serialize_entry(&format!("{}_undefined", stat.as_str()), &value.is_none())?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub groups: Vec<GroupStats>,
}

impl GroupMetrics {
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Values of one statistic, indexed by group id.
    pub fn values(&self, stat: Statistic) -> Vec<Option<f64>> {
        self.groups.iter().map(|g| g.get(stat)).collect()
    }

    pub fn pooled_accuracy(&self) -> f64 {
        let correct: usize = self.groups.iter().map(|g| g.counts.correct()).sum();
        let total: usize = self.groups.iter().map(GroupStats::size).sum();
        correct as f64 / total as f64
    }

    /// JSON object keyed by group display name.
    pub fn to_json(&self) -> serde_json::Value {
        let map = self
            .groups
            .iter()
            .map(|g| (g.name.clone(), serde_json::to_value(g).expect("group stats serialize")))
            .collect();
        serde_json::Value::Object(map)
    }
}

pub fn group_metrics(counts: &ConfusionCounts) -> GroupMetrics {
    GroupMetrics {
        groups: counts
            .group_names
            .iter()
            .zip(&counts.groups)
            .map(|(name, c)| GroupStats::from_counts(name.clone(), *c))
            .collect(),
    }
}

/// `max - min` of a statistic over groups; `None` if any group's value is undefined.
pub fn statistic_disparity(metrics: &GroupMetrics, stat: Statistic) -> Option<f64> {
    spread(metrics.groups.iter().map(|g| g.get(stat)))
}

pub(crate) fn spread(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        let v = v?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Some(hi - lo)
}

/// Disparity of a measure: the spread of its statistic, or the larger of the
/// two spreads for two-statistic measures.
pub fn disparity(metrics: &GroupMetrics, measure: FairnessMeasure) -> Option<f64> {
    measure
        .statistics()
        .iter()
        .map(|&s| statistic_disparity(metrics, s))
        .try_fold(0.0f64, |acc, d| Some(acc.max(d?)))
}
