//! Accuracy / fairness Pareto frontiers over threshold policies.
//!
//! An equality frontier sweeps the disparity bound `epsilon` from 0 to the
//! unconstrained disparity; a minimum-rate frontier sweeps `tau` from the
//! unconstrained minimum group value up to 1. Both grids are linear with
//! `resolution` points, endpoints included. Every sweep point keeps its full
//! per-group metrics so trajectories can be plotted without re-running search.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{disparity, FairnessMeasure, GroupMetrics, Statistic};
use crate::policy::{enforce, Constraint, Enforcement, ThresholdPolicy, MINIMUM_RATE_STATISTICS};
use crate::scorer::ScoredDataset;

/// Whether a smaller or a larger objective is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    /// Sweep value (epsilon or tau) that produced the policy.
    pub parameter: f64,
    pub policy: ThresholdPolicy,
    pub accuracy: f64,
    /// Disparity for equality frontiers, minimum group value for minimum-rate frontiers.
    pub objective_value: f64,
    pub per_group: GroupMetrics,
}

impl FrontierPoint {
    pub fn to_json(&self) -> serde_json::Value {
        let names: Vec<String> = self.per_group.groups.iter().map(|g| g.name.clone()).collect();
        serde_json::json!({
            "parameter": self.parameter,
            "accuracy": self.accuracy,
            "objective": self.objective_value,
            "policy": self.policy.to_json(&names),
            "groups": self.per_group.to_json(),
        })
    }
}

/// Indices of the non-dominated `(accuracy, objective)` pairs, ordered by
/// objective (best first), ties in input order.
///
/// `q` dominates `p` when it is at least as good on both axes and strictly
/// better on one. Identical pairs never dominate each other.
pub fn pareto_indices(pairs: &[(f64, f64)], direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| {
        let by_obj = match direction {
            Direction::Minimize => pairs[a].1.total_cmp(&pairs[b].1),
            Direction::Maximize => pairs[b].1.total_cmp(&pairs[a].1),
        };
        by_obj.then(pairs[b].0.total_cmp(&pairs[a].0)).then(a.cmp(&b))
    });

    let mut keep = Vec::new();
    let mut best_before = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        // block of equal objective; its first element has the top accuracy
        let obj = pairs[order[i]].1;
        let mut j = i;
        while j < order.len() && pairs[order[j]].1 == obj {
            j += 1;
        }
        let top = pairs[order[i]].0;
        if top > best_before {
            keep.extend(order[i..j].iter().copied().filter(|&k| pairs[k].0 == top));
            best_before = top;
        }
        i = j;
    }
    keep
}

/// The non-dominated subset, sorted by ascending objective value.
pub fn pareto_prune(points: &[FrontierPoint], direction: Direction) -> Vec<FrontierPoint> {
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.accuracy, p.objective_value)).collect();
    let mut kept: Vec<FrontierPoint> = pareto_indices(&pairs, direction)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    if direction == Direction::Maximize {
        kept.reverse();
    }
    kept
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    pub direction: Direction,
    /// Non-dominated points sorted by ascending objective value.
    pub points: Vec<FrontierPoint>,
    /// Every feasible sweep point in sweep order, before pruning.
    pub sweep: Vec<FrontierPoint>,
    /// Skipped sweep values and why.
    pub notes: Vec<String>,
}

impl Frontier {
    /// Whether some frontier point has zero disparity (equality frontiers) or
    /// reaches the objective's ceiling of 1 (minimum-rate frontiers).
    pub fn has_perfect_point(&self) -> bool {
        self.points.iter().any(|p| match self.direction {
            Direction::Minimize => p.objective_value == 0.0,
            Direction::Maximize => p.objective_value == 1.0,
        })
    }

    /// One JSON object per frontier point.
    pub fn write_jsonl<W: Write>(&self, w: W) -> Result<()> {
        write_points(&self.points, w)
    }

    /// One JSON object per sweep point, in sweep order.
    pub fn write_sweep_jsonl<W: Write>(&self, w: W) -> Result<()> {
        write_points(&self.sweep, w)
    }

    /// `objective<TAB>accuracy` with a header line.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<frontier tsv>", e);
        writeln!(w, "objective\taccuracy").map_err(io)?;
        for p in &self.points {
            writeln!(w, "{}\t{}", p.objective_value, p.accuracy).map_err(io)?;
        }
        Ok(())
    }
}

fn write_points<W: Write>(points: &[FrontierPoint], mut w: W) -> Result<()> {
    for p in points {
        serde_json::to_writer(&mut w, &p.to_json())?;
        writeln!(w).map_err(|e| Error::io("<frontier jsonl>", e))?;
    }
    Ok(())
}

/// Linear grid of `n >= 2` points from `lo` to `hi`, both endpoints exact.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn point(parameter: f64, e: Enforcement, objective_value: f64) -> FrontierPoint {
    FrontierPoint {
        parameter,
        policy: e.policy,
        accuracy: e.accuracy,
        objective_value,
        per_group: e.metrics,
    }
}

/// Runs `enforce` for each constraint in order; infeasible ones become notes.
fn sweep(
    scored: &ScoredDataset,
    params: &[f64],
    make: impl Fn(f64) -> Constraint + Sync,
    objective: impl Fn(&GroupMetrics) -> Option<f64> + Sync,
) -> Result<(Vec<FrontierPoint>, Vec<String>)> {
    enum Step {
        Point(FrontierPoint),
        Skipped(String),
    }
    let steps: Vec<Result<Step>> = params
        .par_iter()
        .map(|&p| {
            let constraint = make(p);
            match enforce(scored, &constraint) {
                Ok(e) => Ok(match objective(&e.metrics) {
                    Some(obj) => Step::Point(point(p, e, obj)),
                    None => Step::Skipped(format!("{constraint}: skipped, objective undefined")),
                }),
                Err(err @ (Error::Infeasible { .. } | Error::AllUndefined { .. })) => {
                    Ok(Step::Skipped(format!("{constraint}: skipped, {err}")))
                }
                Err(other) => Err(other),
            }
        })
        .collect();
    let mut points = Vec::new();
    let mut notes = Vec::new();
    for step in steps {
        match step? {
            Step::Point(p) => points.push(p),
            Step::Skipped(m) => notes.push(m),
        }
    }
    Ok((points, notes))
}

fn dedup_policies(points: &[FrontierPoint]) -> Vec<FrontierPoint> {
    let mut seen: Vec<&[f64]> = Vec::new();
    let mut out = Vec::new();
    for p in points {
        if !seen.contains(&p.policy.thresholds()) {
            seen.push(p.policy.thresholds());
            out.push(p.clone());
        }
    }
    out
}

/// Accuracy against `measure` disparity, enforcing equality at each epsilon.
pub fn equality_frontier(scored: &ScoredDataset, measure: FairnessMeasure, resolution: usize) -> Result<Frontier> {
    if resolution < 2 {
        return Err(Error::InvalidConstraint(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    if !measure.enforceable() {
        return Err(Error::InvalidConstraint(format!("{measure} cannot be enforced")));
    }
    let free = enforce(scored, &Constraint::Unconstrained)?;
    let top = disparity(&free.metrics, measure).ok_or(Error::AllUndefined {
        statistic: measure.primary_statistic(),
    })?;
    let params = linear_grid(0.0, top, resolution);
    let (mut sweep_points, notes) = sweep(
        scored,
        &params,
        |epsilon| Constraint::Equality { measure, epsilon },
        |m| disparity(m, measure),
    )?;
    sweep_points.push(point(f64::INFINITY, free, top));
    let points = pareto_prune(&dedup_policies(&sweep_points), Direction::Minimize);
    Ok(Frontier {
        direction: Direction::Minimize,
        points,
        sweep: sweep_points,
        notes,
    })
}

fn min_value(m: &GroupMetrics, statistic: Statistic) -> Option<f64> {
    m.values(statistic)
        .into_iter()
        .try_fold(f64::INFINITY, |acc, v| Some(acc.min(v?)))
}

/// Accuracy against the minimum group value of `statistic`, enforcing a
/// minimum rate at each tau.
pub fn mrc_frontier(scored: &ScoredDataset, statistic: Statistic, resolution: usize) -> Result<Frontier> {
    if resolution < 2 {
        return Err(Error::InvalidConstraint(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    if !MINIMUM_RATE_STATISTICS.contains(&statistic) {
        return Err(Error::InvalidConstraint(format!(
            "minimum-rate frontiers need selection_rate, tpr, tnr or precision, not {statistic}"
        )));
    }
    let free = enforce(scored, &Constraint::Unconstrained)?;
    let floor = min_value(&free.metrics, statistic).ok_or(Error::AllUndefined { statistic })?;
    let params = linear_grid(floor, 1.0, resolution);
    let (sweep_points, notes) = sweep(
        scored,
        &params,
        |tau| Constraint::MinimumRate { statistic, tau },
        |m| min_value(m, statistic),
    )?;
    let points = pareto_prune(&dedup_policies(&sweep_points), Direction::Maximize);
    Ok(Frontier {
        direction: Direction::Maximize,
        points,
        sweep: sweep_points,
        notes,
    })
}
