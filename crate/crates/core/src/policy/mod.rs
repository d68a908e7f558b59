//! Per-group decision thresholds and the search that chooses them.
//!
//! A policy assigns one threshold per group; a row is a positive decision iff
//! its score is `>=` its group's threshold. Adjusting a per-group score offset
//! is equivalent for deterministic decisions, so only thresholds are modelled.

mod candidates;
mod level_up;
mod search;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{FairnessMeasure, Statistic};

pub use candidates::{candidate_thresholds, GroupGrid};
pub use level_up::{full_level_up, partial_level_up, LevelUp, Shortfall, PARTIAL_LEVEL_UP_EPSILON};
pub use search::{enforce, enforce_with, Enforcement, SearchOptions};

/// Threshold that rejects every row. The only threshold allowed above 1.
pub const REJECT_ALL: f64 = 1.000001;

/// How a policy was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Exhaustive search over the product of per-group candidate grids.
    ExactGrid,
    /// Exact per-group optimisation for constraints that act on each group separately.
    Separable,
    /// Coordinate descent with restarts; not guaranteed optimal.
    CoordinateDescent,
    FullLevelUp,
    PartialLevelUp,
    /// Supplied by the caller.
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub constraint: Constraint,
    pub search: SearchMode,
    pub approximate: bool,
}

impl Provenance {
    pub fn manual() -> Self {
        Self {
            constraint: Constraint::Unconstrained,
            search: SearchMode::Manual,
            approximate: false,
        }
    }
}

/// A fairness constraint on a threshold policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    Unconstrained,
    /// Disparity of `measure` at most `epsilon` (closed bound).
    Equality {
        measure: FairnessMeasure,
        #[serde(with = "infinite_as_null")]
        epsilon: f64,
    },
    /// Every group's `statistic` at least `tau`.
    MinimumRate {
        statistic: Statistic,
        tau: f64,
    },
    /// Every group's `statistic` at most `kappa` (selection rate only).
    MaximumRate {
        statistic: Statistic,
        kappa: f64,
    },
}

/// Statistics a minimum rate constraint may bound.
pub const MINIMUM_RATE_STATISTICS: [Statistic; 4] = [
    Statistic::SelectionRate,
    Statistic::Tpr,
    Statistic::Tnr,
    Statistic::Precision,
];

impl Constraint {
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidConstraint(m));
        match *self {
            Constraint::Unconstrained => Ok(()),
            Constraint::Equality { measure, epsilon } => {
                if !measure.enforceable() {
                    return invalid(format!("{measure} is reportable but cannot be enforced"));
                }
                if epsilon.is_nan() || epsilon < 0.0 {
                    return invalid(format!("epsilon must be nonnegative, got {epsilon}"));
                }
                Ok(())
            }
            Constraint::MinimumRate { statistic, tau } => {
                if !MINIMUM_RATE_STATISTICS.contains(&statistic) {
                    return invalid(format!(
                        "minimum rate constraints apply to selection_rate, tpr, tnr or precision, not {statistic}"
                    ));
                }
                if !(0.0..=1.0).contains(&tau) {
                    return invalid(format!("tau must lie in [0, 1], got {tau}"));
                }
                Ok(())
            }
            Constraint::MaximumRate { statistic, kappa } => {
                if statistic != Statistic::SelectionRate {
                    return invalid(format!(
                        "maximum rate constraints apply to selection_rate, not {statistic}"
                    ));
                }
                if !(0.0..=1.0).contains(&kappa) {
                    return invalid(format!("kappa must lie in [0, 1], got {kappa}"));
                }
                Ok(())
            }
        }
    }

    /// Statistics the constraint acts on.
    pub fn statistics(&self) -> Vec<Statistic> {
        match *self {
            Constraint::Unconstrained => vec![],
            Constraint::Equality { measure, .. } => measure.statistics().to_vec(),
            Constraint::MinimumRate { statistic, .. } | Constraint::MaximumRate { statistic, .. } => {
                vec![statistic]
            }
        }
    }

    /// Statistics used by the tie-break chain: disparity of these, then the
    /// minimum group value of the first.
    pub(crate) fn tie_break_statistics(&self) -> Vec<Statistic> {
        match self {
            Constraint::Unconstrained => vec![Statistic::SelectionRate],
            other => other.statistics(),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Unconstrained => write!(f, "unconstrained"),
            Constraint::Equality { measure, epsilon } => write!(f, "equality({measure}, epsilon={epsilon})"),
            Constraint::MinimumRate { statistic, tau } => write!(f, "minimum_rate({statistic} >= {tau})"),
            Constraint::MaximumRate { statistic, kappa } => write!(f, "maximum_rate({statistic} <= {kappa})"),
        }
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// One threshold per group id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    thresholds: Vec<f64>,
    pub provenance: Provenance,
}

impl ThresholdPolicy {
    pub fn new(thresholds: Vec<f64>, provenance: Provenance) -> Result<Self> {
        for (g, &t) in thresholds.iter().enumerate() {
            if !((0.0..=1.0).contains(&t) || t == REJECT_ALL) {
                return Err(Error::InvalidPolicy(format!(
                    "group {g}: threshold {t} must lie in [0, 1] or be the reject-all sentinel {REJECT_ALL}"
                )));
            }
        }
        Ok(Self { thresholds, provenance })
    }

    /// Same threshold for `groups` groups, manual provenance.
    pub fn uniform(groups: usize, threshold: f64) -> Self {
        Self::new(vec![threshold; groups], Provenance::manual()).expect("valid uniform threshold")
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn threshold(&self, group: usize) -> f64 {
        self.thresholds[group]
    }

    /// `{"thresholds": {group_name: t}, "provenance": {..}}`.
    pub fn to_json(&self, group_names: &[String]) -> serde_json::Value {
        let thresholds: serde_json::Map<String, serde_json::Value> = group_names
            .iter()
            .zip(&self.thresholds)
            .map(|(name, &t)| (name.clone(), serde_json::json!(t)))
            .collect();
        serde_json::json!({
            "thresholds": thresholds,
            "provenance": self.provenance,
        })
    }

    /// Inverse of [`to_json`](Self::to_json); every name in `group_names` must be present.
    pub fn from_json(value: &serde_json::Value, group_names: &[String]) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            thresholds: BTreeMap<String, f64>,
            provenance: Provenance,
        }
        let doc: Doc = serde_json::from_value(value.clone())?;
        let thresholds = group_names
            .iter()
            .enumerate()
            .map(|(g, name)| {
                doc.thresholds
                    .get(name)
                    .copied()
                    .ok_or(Error::MissingGroup { group: g })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(thresholds, doc.provenance)
    }
}
