//! Group-fairness post-processing with per-group decision thresholds.
//!
//! The pipeline is ingest, score, enforce, frontier, audit. Scores are
//! probabilities in `[0, 1]`; a row receives a positive decision iff its score
//! is `>=` its group's threshold.

pub mod audit;
pub mod error;
pub mod frontier;
pub mod ingest;
pub mod metrics;
pub mod policy;
pub mod scorer;

pub use audit::{build_report, detect_levelling_down, AuditReport, EvaluationSplit};
pub use error::{Error, Result};
pub use frontier::{equality_frontier, mrc_frontier, pareto_prune, Direction, Frontier, FrontierPoint};
pub use ingest::{LabeledDataset, Row};
pub use metrics::{disparity, FairnessMeasure, GroupMetrics, Statistic};
pub use policy::{enforce, Constraint, ThresholdPolicy, REJECT_ALL};
pub use scorer::{ScoredDataset, ScoredRow};
