//! Levelling up: raise the groups that trail on a beneficial statistic while
//! every group at the top keeps its unconstrained threshold.
//!
//! A trailing group's threshold is moved one candidate at a time away from its
//! unconstrained value, in the direction that increases the statistic (down
//! for selection rate and recall, up for true negative rate and precision),
//! and stops at the first candidate that reaches the target. The achieved value
//! therefore overshoots the target by at most one grid step.

use serde::{Deserialize, Serialize};

use super::search::{enforce, Enforcement};
use super::{Constraint, GroupGrid, Provenance, SearchMode, ThresholdPolicy, MINIMUM_RATE_STATISTICS};
use crate::error::{Error, Result};
use crate::metrics::{group_metrics, ConfusionCounts, FairnessMeasure, GroupMetrics, Statistic};
use crate::scorer::ScoredDataset;

/// Equality tolerance whose per-group levels [`partial_level_up`] targets.
pub const PARTIAL_LEVEL_UP_EPSILON: f64 = 0.01;

/// A group whose target could not be reached on its candidate grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortfall {
    pub group: usize,
    pub target: f64,
    /// Best value reachable by moving in the improving direction.
    pub achievable: f64,
}

impl Shortfall {
    pub fn gap(&self) -> f64 {
        self.target - self.achievable
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelUp {
    pub policy: ThresholdPolicy,
    pub statistic: Statistic,
    /// Group with the highest unconstrained value (first on ties).
    pub advantaged: usize,
    pub baseline: Enforcement,
    /// Target per group; `None` where the group kept its unconstrained threshold.
    pub targets: Vec<Option<f64>>,
    pub counts: ConfusionCounts,
    pub metrics: GroupMetrics,
    pub accuracy: f64,
    pub shortfalls: Vec<Shortfall>,
}

/// Levels every trailing group up to the best group's unconstrained value.
pub fn full_level_up(scored: &ScoredDataset, statistic: Statistic) -> Result<LevelUp> {
    check_statistic(statistic)?;
    let baseline = enforce(scored, &Constraint::Unconstrained)?;
    let values = defined_values(&baseline.metrics, statistic)?;
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let targets = values.iter().map(|&v| (v < top).then_some(top)).collect();
    level_up(scored, statistic, baseline, targets, SearchMode::FullLevelUp)
}

/// Levels trailing groups up only as far as accuracy-maximizing equality
/// enforcement (at [`PARTIAL_LEVEL_UP_EPSILON`]) would have put them.
pub fn partial_level_up(scored: &ScoredDataset, measure: FairnessMeasure) -> Result<LevelUp> {
    let statistic = match measure.statistics() {
        [s] if MINIMUM_RATE_STATISTICS.contains(s) => *s,
        _ => {
            return Err(Error::Unsupported(format!(
                "no level-up target is computable for {measure}; use a measure tracking one of selection_rate, tpr, tnr, precision"
            )))
        }
    };
    let baseline = enforce(scored, &Constraint::Unconstrained)?;
    let values = defined_values(&baseline.metrics, statistic)?;
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let equal = enforce(
        scored,
        &Constraint::Equality {
            measure,
            epsilon: PARTIAL_LEVEL_UP_EPSILON,
        },
    )?;
    let equal_values = defined_values(&equal.metrics, statistic)?;
    let targets = values
        .iter()
        .zip(&equal_values)
        .map(|(&v, &eq)| (v < top && eq > v).then_some(eq))
        .collect();
    level_up(scored, statistic, baseline, targets, SearchMode::PartialLevelUp)
}

fn check_statistic(statistic: Statistic) -> Result<()> {
    if MINIMUM_RATE_STATISTICS.contains(&statistic) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "cannot level up {statistic}; use selection_rate, tpr, tnr or precision"
        )))
    }
}

fn defined_values(metrics: &GroupMetrics, statistic: Statistic) -> Result<Vec<f64>> {
    metrics
        .values(statistic)
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(Error::AllUndefined { statistic })
}

/// Selection rate and recall rise as the threshold falls; true negative rate
/// and (typically) precision rise as it climbs.
fn improves_downward(statistic: Statistic) -> bool {
    matches!(statistic, Statistic::SelectionRate | Statistic::Tpr)
}

fn level_up(
    scored: &ScoredDataset,
    statistic: Statistic,
    baseline: Enforcement,
    targets: Vec<Option<f64>>,
    search: SearchMode,
) -> Result<LevelUp> {
    let values = defined_values(&baseline.metrics, statistic)?;
    let advantaged = values
        .iter()
        .enumerate()
        .fold(0, |best, (g, &v)| if v > values[best] { g } else { best });

    let mut thresholds = baseline.policy.thresholds().to_vec();
    let mut groups = baseline.counts.groups.clone();
    let mut shortfalls = Vec::new();
    for (g, target) in targets.iter().enumerate() {
        let Some(target) = *target else { continue };
        let grid = GroupGrid::build(scored, g);
        let start = grid
            .thresholds
            .iter()
            .position(|&t| t == thresholds[g])
            .expect("baseline threshold lies on the candidate grid");
        let path: Vec<usize> = if improves_downward(statistic) {
            (0..=start).rev().collect()
        } else {
            (start..grid.len()).collect()
        };
        let value_at = |k: usize| statistic.of(&grid.counts[k]);
        let chosen = match path.iter().copied().find(|&k| value_at(k).is_some_and(|v| v >= target)) {
            Some(k) => k,
            None => {
                // best reachable along the path; ties go to the candidate nearest the start
                let (k, achievable) = path
                    .iter()
                    .filter_map(|&k| value_at(k).map(|v| (k, v)))
                    .fold(None, |best: Option<(usize, f64)>, (k, v)| match best {
                        Some((_, bv)) if bv >= v => best,
                        _ => Some((k, v)),
                    })
                    .expect("start candidate has a defined value");
                shortfalls.push(Shortfall {
                    group: g,
                    target,
                    achievable,
                });
                k
            }
        };
        thresholds[g] = grid.thresholds[chosen];
        groups[g] = grid.counts[chosen];
    }

    let tau = targets.iter().flatten().copied().reduce(f64::min);
    let constraint = match tau {
        Some(tau) => Constraint::MinimumRate { statistic, tau },
        None => Constraint::Unconstrained,
    };
    let policy = ThresholdPolicy::new(
        thresholds,
        Provenance {
            constraint,
            search,
            approximate: false,
        },
    )?;
    let counts = ConfusionCounts {
        group_names: scored.group_names().to_vec(),
        groups,
    };
    let metrics = group_metrics(&counts);
    Ok(LevelUp {
        policy,
        statistic,
        advantaged,
        accuracy: counts.accuracy(),
        baseline,
        targets,
        counts,
        metrics,
        shortfalls,
    })
}
