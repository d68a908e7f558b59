//! Accuracy-maximizing threshold search under a constraint.
//!
//! Among feasible policies the winner has the most correct decisions. Ties
//! are broken by (1) lower disparity of the constrained statistic(s), (2)
//! higher minimum group value of the first constrained statistic, (3) the
//! lexicographically smallest threshold vector. The unconstrained problem
//! uses selection rate for (1) and (2).

use std::cmp::Ordering;

use rayon::prelude::*;

use super::{Constraint, GroupGrid, Provenance, SearchMode, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::metrics::{group_metrics, spread, Confusion, ConfusionCounts, GroupMetrics, Statistic};
use crate::scorer::ScoredDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Equality constraints are solved exactly by grid product up to this many
    /// groups; beyond it coordinate descent is used and the result is flagged approximate.
    pub exact_group_limit: usize,
    /// Maximum coordinate-descent sweeps per restart.
    pub max_sweeps: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            exact_group_limit: 3,
            max_sweeps: 100,
        }
    }
}

/// Result of [`enforce`].
#[derive(Debug, Clone, PartialEq)]
pub struct Enforcement {
    pub policy: ThresholdPolicy,
    pub counts: ConfusionCounts,
    pub metrics: GroupMetrics,
    pub accuracy: f64,
}

pub fn enforce(scored: &ScoredDataset, constraint: &Constraint) -> Result<Enforcement> {
    enforce_with(scored, constraint, &SearchOptions::default())
}

pub fn enforce_with(scored: &ScoredDataset, constraint: &Constraint, options: &SearchOptions) -> Result<Enforcement> {
    constraint.validate()?;
    let grids: Vec<GroupGrid> = (0..scored.num_groups()).map(|g| GroupGrid::build(scored, g)).collect();
    let ctx = Context::new(&grids, constraint.tie_break_statistics());

    let (best, search) = match *constraint {
        Constraint::Equality { epsilon, .. } => {
            if grids.len() <= options.exact_group_limit {
                let lists: Vec<Vec<usize>> = grids.iter().map(|g| (0..g.len()).collect()).collect();
                let outcome = ctx.best_over_product(&lists, |c| c.disparity.is_some_and(|d| d <= epsilon));
                (ctx.resolve_equality(outcome, epsilon)?, SearchMode::ExactGrid)
            } else {
                let best = ctx.coordinate_descent(epsilon, options.max_sweeps);
                (ctx.resolve_equality(best, epsilon)?, SearchMode::CoordinateDescent)
            }
        }
        _ => (separable(scored, &ctx, constraint)?, SearchMode::Separable),
    };

    let thresholds = best
        .idx
        .iter()
        .zip(&grids)
        .map(|(&k, grid)| grid.thresholds[k])
        .collect();
    let policy = ThresholdPolicy::new(
        thresholds,
        Provenance {
            constraint: *constraint,
            search,
            approximate: search == SearchMode::CoordinateDescent,
        },
    )?;
    let counts = ConfusionCounts {
        group_names: scored.group_names().to_vec(),
        groups: best.idx.iter().zip(&grids).map(|(&k, grid)| grid.counts[k]).collect(),
    };
    let metrics = group_metrics(&counts);
    Ok(Enforcement {
        accuracy: counts.accuracy(),
        policy,
        counts,
        metrics,
    })
}

/// A candidate policy as grid indices plus its ranking keys.
#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    idx: Vec<usize>,
    correct: usize,
    disparity: Option<f64>,
    min_value: Option<f64>,
}

impl Candidate {
    /// `Less` means `self` ranks ahead of `other`.
    fn rank(&self, other: &Self) -> Ordering {
        other
            .correct
            .cmp(&self.correct)
            .then_with(|| {
                let a = self.disparity.unwrap_or(f64::INFINITY);
                let b = other.disparity.unwrap_or(f64::INFINITY);
                a.total_cmp(&b)
            })
            .then_with(|| {
                let a = self.min_value.unwrap_or(f64::NEG_INFINITY);
                let b = other.min_value.unwrap_or(f64::NEG_INFINITY);
                b.total_cmp(&a)
            })
            .then_with(|| self.idx.cmp(&other.idx))
    }
}

/// Best feasible candidate plus bookkeeping for error reporting.
#[derive(Debug, Default)]
struct Outcome {
    best: Option<Candidate>,
    any_defined: bool,
    least_disparity: Option<f64>,
}

impl Outcome {
    fn merge(mut self, other: Outcome) -> Outcome {
        self.any_defined |= other.any_defined;
        self.least_disparity = match (self.least_disparity, other.least_disparity) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.best = match (self.best.take(), other.best) {
            (Some(a), Some(b)) => Some(if b.rank(&a) == Ordering::Less { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }
}

struct Context<'a> {
    grids: &'a [GroupGrid],
    correct: Vec<Vec<usize>>,
    stats: Vec<Statistic>,
    // values[s][g][k]
    values: Vec<Vec<Vec<Option<f64>>>>,
}

impl<'a> Context<'a> {
    fn new(grids: &'a [GroupGrid], stats: Vec<Statistic>) -> Self {
        let correct = grids
            .iter()
            .map(|g| g.counts.iter().map(Confusion::correct).collect())
            .collect();
        let values = stats
            .iter()
            .map(|s| {
                grids
                    .iter()
                    .map(|g| g.counts.iter().map(|c| s.of(c)).collect())
                    .collect()
            })
            .collect();
        Self {
            grids,
            correct,
            stats,
            values,
        }
    }

    fn evaluate(&self, idx: &[usize]) -> Candidate {
        let correct = idx.iter().enumerate().map(|(g, &k)| self.correct[g][k]).sum();
        let mut disparity = Some(0.0f64);
        for per_group in &self.values {
            let d = spread(idx.iter().enumerate().map(|(g, &k)| per_group[g][k]));
            disparity = match (disparity, d) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
        let min_value = idx
            .iter()
            .enumerate()
            .map(|(g, &k)| self.values[0][g][k])
            .try_fold(f64::INFINITY, |m, v| Some(m.min(v?)));
        Candidate {
            idx: idx.to_vec(),
            correct,
            disparity,
            min_value,
        }
    }

    /// Exhaustive search over `lists[0] x lists[1] x ..` keeping the best
    /// candidate accepted by `feasible`. Parallel over the first group; the
    /// reduction uses the total tie-break order, so the result does not depend
    /// on evaluation order.
    fn best_over_product<F>(&self, lists: &[Vec<usize>], feasible: F) -> Outcome
    where
        F: Fn(&Candidate) -> bool + Sync,
    {
        lists[0]
            .par_iter()
            .map(|&first| {
                let mut outcome = Outcome::default();
                let mut pos = vec![0usize; lists.len()];
                let mut idx: Vec<usize> = lists.iter().map(|l| l[0]).collect();
                idx[0] = first;
                loop {
                    let cand = self.evaluate(&idx);
                    if let Some(d) = cand.disparity {
                        outcome.any_defined = true;
                        outcome.least_disparity = Some(outcome.least_disparity.map_or(d, |m: f64| m.min(d)));
                    }
                    if feasible(&cand) && outcome.best.as_ref().is_none_or(|b| cand.rank(b) == Ordering::Less) {
                        outcome.best = Some(cand);
                    }
                    // odometer over groups 1..
                    let mut g = lists.len() - 1;
                    loop {
                        if g == 0 {
                            return outcome;
                        }
                        pos[g] += 1;
                        if pos[g] < lists[g].len() {
                            idx[g] = lists[g][pos[g]];
                            break;
                        }
                        pos[g] = 0;
                        idx[g] = lists[g][0];
                        g -= 1;
                    }
                }
            })
            .reduce(Outcome::default, Outcome::merge)
    }

    fn resolve_equality(&self, outcome: Outcome, epsilon: f64) -> Result<Candidate> {
        match outcome.best {
            Some(best) => Ok(best),
            None if !outcome.any_defined => Err(Error::AllUndefined {
                statistic: self.stats[0],
            }),
            None => Err(Error::Infeasible {
                blocking_group: None,
                reason: format!(
                    "no threshold policy reaches disparity <= {epsilon} (smallest found {})",
                    outcome.least_disparity.unwrap_or(f64::NAN)
                ),
            }),
        }
    }

    /// Coordinate descent on (constraint violation, tie-break order) from three
    /// starts: per-group accuracy maxima, select-all, reject-all.
    fn coordinate_descent(&self, epsilon: f64, max_sweeps: usize) -> Outcome {
        let violation = |c: &Candidate| c.disparity.map_or(f64::INFINITY, |d| (d - epsilon).max(0.0));
        let key = |a: &Candidate, b: &Candidate| violation(a).total_cmp(&violation(b)).then_with(|| a.rank(b));

        let accuracy_start: Vec<usize> = self
            .correct
            .iter()
            .map(|col| {
                let max = *col.iter().max().expect("nonempty grid");
                col.iter().position(|&c| c == max).expect("max present")
            })
            .collect();
        let starts = [
            accuracy_start,
            vec![0; self.grids.len()],
            self.grids.iter().map(|g| g.len() - 1).collect(),
        ];

        let mut outcome = Outcome::default();
        for start in starts {
            let mut best = self.evaluate(&start);
            for _ in 0..max_sweeps {
                let before = best.idx.clone();
                for g in 0..self.grids.len() {
                    let mut idx = best.idx.clone();
                    for k in 0..self.grids[g].len() {
                        idx[g] = k;
                        let cand = self.evaluate(&idx);
                        if let Some(d) = cand.disparity {
                            outcome.any_defined = true;
                            outcome.least_disparity = Some(outcome.least_disparity.map_or(d, |m: f64| m.min(d)));
                        }
                        if key(&cand, &best) == Ordering::Less {
                            best = cand;
                        }
                    }
                }
                if best.idx == before {
                    break;
                }
            }
            if best.disparity.is_some_and(|d| d <= epsilon) {
                outcome = outcome.merge(Outcome {
                    best: Some(best),
                    any_defined: true,
                    least_disparity: None,
                });
            }
        }
        outcome
    }
}

/// Constraints that restrict each group on its own: accuracy decomposes over
/// groups, so the optimum is a product of per-group accuracy maximizers and
/// only the tie-break couples groups.
fn separable(scored: &ScoredDataset, ctx: &Context<'_>, constraint: &Constraint) -> Result<Candidate> {
    let mut argmax_sets = Vec::with_capacity(ctx.grids.len());
    for (g, grid) in ctx.grids.iter().enumerate() {
        let feasible: Vec<usize> = match *constraint {
            Constraint::Unconstrained => (0..grid.len()).collect(),
            Constraint::MinimumRate { statistic, tau } => {
                let values: Vec<Option<f64>> = grid.counts.iter().map(|c| statistic.of(c)).collect();
                let ok: Vec<usize> = (0..grid.len())
                    .filter(|&k| values[k].is_some_and(|v| v >= tau))
                    .collect();
                if ok.is_empty() {
                    let best = values.iter().flatten().copied().reduce(f64::max);
                    return Err(match best {
                        None => Error::AllUndefined { statistic },
                        Some(best) => Error::Infeasible {
                            blocking_group: Some(scored.group_names()[g].clone()),
                            reason: format!(
                                "group `{}` cannot reach {statistic} >= {tau}; the most it achieves is {best}",
                                scored.group_names()[g]
                            ),
                        },
                    });
                }
                ok
            }
            Constraint::MaximumRate { statistic, kappa } => {
                let values: Vec<Option<f64>> = grid.counts.iter().map(|c| statistic.of(c)).collect();
                // reject-all always satisfies a selection-rate cap
                (0..grid.len())
                    .filter(|&k| values[k].is_some_and(|v| v <= kappa))
                    .collect()
            }
            Constraint::Equality { .. } => unreachable!("equality constraints are not separable"),
        };
        let max = feasible
            .iter()
            .map(|&k| ctx.correct[g][k])
            .max()
            .expect("nonempty feasible set");
        argmax_sets.push(
            feasible
                .into_iter()
                .filter(|&k| ctx.correct[g][k] == max)
                .collect::<Vec<_>>(),
        );
    }
    Ok(ctx
        .best_over_product(&argmax_sets, |_| true)
        .best
        .expect("nonempty product"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{confusion, disparity, FairnessMeasure};
    use crate::policy::REJECT_ALL;
    use crate::scorer::ScoredRow;

    fn data(rows: &[(f64, bool, usize)]) -> ScoredDataset {
        ScoredDataset::new(
            rows.iter()
                .map(|&(score, label, group)| ScoredRow { score, label, group })
                .collect(),
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    fn gap_data() -> ScoredDataset {
        data(&[
            (0.9, true, 0),
            (0.8, true, 0),
            (0.7, true, 0),
            (0.6, false, 0),
            (0.55, true, 0),
            (0.3, false, 0),
            (0.2, false, 0),
            (0.8, true, 1),
            (0.45, false, 1),
            (0.4, true, 1),
            (0.3, false, 1),
            (0.2, false, 1),
            (0.1, false, 1),
        ])
    }

    #[test]
    fn unconstrained_is_accuracy_maximal() {
        let d = gap_data();
        let e = enforce(&d, &Constraint::Unconstrained).unwrap();
        for &t0 in &candidate_grid(&d, 0) {
            for &t1 in &candidate_grid(&d, 1) {
                let p = ThresholdPolicy::uniform(2, 0.0);
                let p = ThresholdPolicy::new(vec![t0, t1], p.provenance).unwrap();
                assert!(confusion(&d, &p).unwrap().accuracy() <= e.accuracy);
            }
        }
    }

    fn candidate_grid(d: &ScoredDataset, g: usize) -> Vec<f64> {
        GroupGrid::build(d, g).thresholds
    }

    #[test]
    fn infinite_epsilon_matches_unconstrained() {
        let d = gap_data();
        let free = enforce(&d, &Constraint::Unconstrained).unwrap();
        let vacuous = enforce(
            &d,
            &Constraint::Equality {
                measure: FairnessMeasure::DemographicParity,
                epsilon: f64::INFINITY,
            },
        )
        .unwrap();
        assert_eq!(free.policy.thresholds(), vacuous.policy.thresholds());
        assert_eq!(free.accuracy, vacuous.accuracy);
    }

    #[test]
    fn full_selection_rate_forces_select_all() {
        let d = gap_data();
        let e = enforce(
            &d,
            &Constraint::MinimumRate {
                statistic: Statistic::SelectionRate,
                tau: 1.0,
            },
        )
        .unwrap();
        assert_eq!(e.policy.thresholds(), &[0.0, 0.0]);
        assert_eq!(e.accuracy, d.positive_fraction());
    }

    #[test]
    fn counts_agree_with_direct_confusion() {
        let d = gap_data();
        let e = enforce(
            &d,
            &Constraint::Equality {
                measure: FairnessMeasure::EqualOpportunity,
                epsilon: 0.1,
            },
        )
        .unwrap();
        assert_eq!(confusion(&d, &e.policy).unwrap(), e.counts);
        assert!(disparity(&e.metrics, FairnessMeasure::EqualOpportunity).unwrap() <= 0.1);
    }

    #[test]
    fn unreachable_precision_names_group() {
        // group b has no positives above its negatives
        let d = data(&[(0.9, true, 0), (0.1, false, 0), (0.9, false, 1), (0.1, true, 1)]);
        let err = enforce(
            &d,
            &Constraint::MinimumRate {
                statistic: Statistic::Precision,
                tau: 0.9,
            },
        )
        .unwrap_err();
        match err {
            Error::Infeasible { blocking_group, .. } => assert_eq!(blocking_group.as_deref(), Some("b")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undefined_everywhere() {
        // group b has no positive labels: tpr is 0/0 under every threshold
        let d = data(&[(0.9, true, 0), (0.1, false, 0), (0.9, false, 1), (0.1, false, 1)]);
        let err = enforce(
            &d,
            &Constraint::Equality {
                measure: FairnessMeasure::EqualOpportunity,
                epsilon: 0.1,
            },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::AllUndefined {
                statistic: Statistic::Tpr
            }
        ));
    }

    #[test]
    fn maximum_rate_caps_selection() {
        let d = gap_data();
        let e = enforce(
            &d,
            &Constraint::MaximumRate {
                statistic: Statistic::SelectionRate,
                kappa: 0.2,
            },
        )
        .unwrap();
        for g in &e.metrics.groups {
            assert!(g.selection_rate.unwrap() <= 0.2);
        }
        let zero = enforce(
            &d,
            &Constraint::MaximumRate {
                statistic: Statistic::SelectionRate,
                kappa: 0.0,
            },
        )
        .unwrap();
        assert_eq!(zero.policy.thresholds(), &[REJECT_ALL, REJECT_ALL]);
    }

    #[test]
    fn coordinate_descent_is_flagged() {
        let d = gap_data();
        let options = SearchOptions {
            exact_group_limit: 1,
            ..SearchOptions::default()
        };
        let c = Constraint::Equality {
            measure: FairnessMeasure::DemographicParity,
            epsilon: 0.05,
        };
        let approx = enforce_with(&d, &c, &options).unwrap();
        assert!(approx.policy.provenance.approximate);
        assert_eq!(approx.policy.provenance.search, SearchMode::CoordinateDescent);
        assert!(disparity(&approx.metrics, FairnessMeasure::DemographicParity).unwrap() <= 0.05);
        let exact = enforce(&d, &c).unwrap();
        assert!(!exact.policy.provenance.approximate);
        assert!(exact.accuracy >= approx.accuracy);
    }
}
