//! Disaggregated before/after reports and levelling-down detection.
//!
//! A report always carries every group's absolute statistics under both
//! policies, never just the disparity between them.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{confusion, group_metrics, GroupMetrics, HarmDirection, Statistic};
use crate::policy::{Constraint, ThresholdPolicy};
use crate::scorer::ScoredDataset;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Absolute drop that counts as levelling down.
pub const DEFAULT_TOLERANCE: f64 = 0.005;

/// Which rows the report was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationSplit {
    Train,
    Eval,
    /// Every row, e.g. a synthetic population or bring-your-own scores.
    Full,
}

impl fmt::Display for EvaluationSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvaluationSplit::Train => "train",
            EvaluationSplit::Eval => "eval",
            EvaluationSplit::Full => "full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaFlag {
    /// Monitored and within tolerance (or moved in the harmless direction).
    Clear,
    LevelledDown,
    /// Undefined before or after.
    Indeterminate,
    /// Not one of the monitored statistics, or has no harm direction.
    NotMonitored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatDelta {
    pub statistic: Statistic,
    pub before: Option<f64>,
    pub after: Option<f64>,
    /// `after - before`.
    pub delta: Option<f64>,
    pub harm_direction: Option<HarmDirection>,
    pub flag: DeltaFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDeltas {
    pub group: usize,
    pub name: String,
    pub deltas: Vec<StatDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelledDown {
    pub group: usize,
    pub name: String,
    pub statistic: Statistic,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Indeterminate {
    pub group: usize,
    pub name: String,
    pub statistic: Statistic,
    pub before: Option<f64>,
    pub after: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub flagged: Vec<LevelledDown>,
    pub indeterminate: Vec<Indeterminate>,
}

/// Harm text for a flagged statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmAnnotation {
    pub statistic: Statistic,
    pub harm: Option<String>,
    pub remedy: Option<String>,
    /// Present for statistics whose harmful direction depends on context.
    pub caveat: Option<String>,
}

fn delta_flag(stat: Statistic, before: Option<f64>, after: Option<f64>, tolerance: f64) -> DeltaFlag {
    let Some(direction) = stat.harm_direction() else {
        return DeltaFlag::NotMonitored;
    };
    let (Some(b), Some(a)) = (before, after) else {
        return DeltaFlag::Indeterminate;
    };
    let delta = a - b;
    let harmed = match direction {
        // a drop in selection is the harm tracked here; rises are left to the caveat
        HarmDirection::HigherIsBetter | HarmDirection::Bidirectional => delta < -tolerance,
        HarmDirection::LowerIsBetter => delta > tolerance,
    };
    if harmed {
        DeltaFlag::LevelledDown
    } else {
        DeltaFlag::Clear
    }
}

fn check_groups(baseline: &GroupMetrics, constrained: &GroupMetrics) -> Result<()> {
    let names = |m: &GroupMetrics| m.groups.iter().map(|g| g.name.clone()).collect::<Vec<_>>();
    if names(baseline) != names(constrained) {
        return Err(Error::GroupMismatch(format!(
            "baseline groups {:?} differ from constrained groups {:?}",
            names(baseline),
            names(constrained)
        )));
    }
    Ok(())
}

fn check_tolerance(tolerance: f64) -> Result<()> {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::InvalidConstraint(format!(
            "tolerance must be nonnegative, got {tolerance}"
        )));
    }
    Ok(())
}

/// Group/statistic pairs in `statistics` that got worse by more than `tolerance`.
pub fn detect_levelling_down(
    baseline: &GroupMetrics,
    constrained: &GroupMetrics,
    statistics: &[Statistic],
    tolerance: f64,
) -> Result<Detection> {
    check_groups(baseline, constrained)?;
    check_tolerance(tolerance)?;
    let mut out = Detection::default();
    for (g, (b, a)) in baseline.groups.iter().zip(&constrained.groups).enumerate() {
        for &stat in statistics {
            let (before, after) = (b.get(stat), a.get(stat));
            match delta_flag(stat, before, after, tolerance) {
                DeltaFlag::LevelledDown => out.flagged.push(LevelledDown {
                    group: g,
                    name: b.name.clone(),
                    statistic: stat,
                    delta: after.unwrap() - before.unwrap(),
                }),
                DeltaFlag::Indeterminate => out.indeterminate.push(Indeterminate {
                    group: g,
                    name: b.name.clone(),
                    statistic: stat,
                    before,
                    after,
                }),
                DeltaFlag::Clear | DeltaFlag::NotMonitored => {}
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub split: EvaluationSplit,
    pub tolerance: f64,
    /// Statistics checked for levelling down; `None` means the constraint's own.
    pub monitored: Option<Vec<Statistic>>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            split: EvaluationSplit::Train,
            tolerance: DEFAULT_TOLERANCE,
            monitored: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub split: EvaluationSplit,
    pub constraint: Constraint,
    pub tolerance: f64,
    pub monitored: Vec<Statistic>,
    pub baseline_policy: ThresholdPolicy,
    pub constrained_policy: ThresholdPolicy,
    pub baseline: GroupMetrics,
    pub constrained: GroupMetrics,
    pub per_group_deltas: Vec<GroupDeltas>,
    pub levelled_down_groups: Vec<LevelledDown>,
    pub indeterminate: Vec<Indeterminate>,
    pub harm_annotations: Vec<HarmAnnotation>,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
}

pub fn build_report(
    scored: &ScoredDataset,
    baseline_policy: &ThresholdPolicy,
    constrained_policy: &ThresholdPolicy,
    constraint: &Constraint,
) -> Result<AuditReport> {
    build_report_with(
        scored,
        baseline_policy,
        constrained_policy,
        constraint,
        &AuditOptions::default(),
    )
}

pub fn build_report_with(
    scored: &ScoredDataset,
    baseline_policy: &ThresholdPolicy,
    constrained_policy: &ThresholdPolicy,
    constraint: &Constraint,
    options: &AuditOptions,
) -> Result<AuditReport> {
    let baseline = group_metrics(&confusion(scored, baseline_policy)?);
    let constrained = group_metrics(&confusion(scored, constrained_policy)?);
    let monitored = options.monitored.clone().unwrap_or_else(|| constraint.statistics());
    let detection = detect_levelling_down(&baseline, &constrained, &monitored, options.tolerance)?;

    let per_group_deltas = baseline
        .groups
        .iter()
        .zip(&constrained.groups)
        .enumerate()
        .map(|(g, (b, a))| GroupDeltas {
            group: g,
            name: b.name.clone(),
            deltas: Statistic::ALL
                .iter()
                .map(|&stat| {
                    let (before, after) = (b.get(stat), a.get(stat));
                    let flag = if monitored.contains(&stat) {
                        delta_flag(stat, before, after, options.tolerance)
                    } else {
                        DeltaFlag::NotMonitored
                    };
                    StatDelta {
                        statistic: stat,
                        before,
                        after,
                        delta: before.zip(after).map(|(b, a)| a - b),
                        harm_direction: stat.harm_direction(),
                        flag,
                    }
                })
                .collect(),
        })
        .collect();

    let mut harm_annotations: Vec<HarmAnnotation> = Vec::new();
    for f in &detection.flagged {
        if harm_annotations.iter().any(|h| h.statistic == f.statistic) {
            continue;
        }
        let profile = f.statistic.measure().map(|m| m.harm_profile());
        let bidirectional = f.statistic.harm_direction() == Some(HarmDirection::Bidirectional);
        harm_annotations.push(HarmAnnotation {
            statistic: f.statistic,
            harm: profile.as_ref().and_then(|p| p.harm).map(str::to_owned),
            remedy: profile.as_ref().and_then(|p| p.remedy).map(str::to_owned),
            caveat: bidirectional.then(|| {
                format!(
                    "{} may be harmful in either direction depending on context. {}",
                    f.statistic,
                    profile.as_ref().and_then(|p| p.remedy).unwrap_or_default()
                )
            }),
        });
    }

    Ok(AuditReport {
        schema_version: REPORT_SCHEMA_VERSION,
        split: options.split,
        constraint: *constraint,
        tolerance: options.tolerance,
        monitored,
        baseline_policy: baseline_policy.clone(),
        constrained_policy: constrained_policy.clone(),
        accuracy_before: baseline.pooled_accuracy(),
        accuracy_after: constrained.pooled_accuracy(),
        baseline,
        constrained,
        per_group_deltas,
        levelled_down_groups: detection.flagged,
        indeterminate: detection.indeterminate,
        harm_annotations,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_owned(), |x| format!("{x:.4}"))
}

impl AuditReport {
    pub fn is_flagged(&self, group: usize, statistic: Statistic) -> bool {
        self.levelled_down_groups
            .iter()
            .any(|f| f.group == group && f.statistic == statistic)
    }

    /// Plain-text rendering: header, one table per group, then flagged harms.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Audit report (schema v{})", self.schema_version);
        let _ = writeln!(s, "Evaluated on: {} split", self.split.to_string().to_uppercase());
        let _ = writeln!(s, "Constraint: {}", self.constraint);
        let _ = writeln!(
            s,
            "Accuracy: {:.4} -> {:.4} ({:+.4})",
            self.accuracy_before,
            self.accuracy_after,
            self.accuracy_after - self.accuracy_before
        );
        let _ = writeln!(s, "Tolerance: {}", self.tolerance);
        for (g, group) in self.per_group_deltas.iter().enumerate() {
            let _ = writeln!(
                s,
                "\nGroup {} (n={}, threshold {} -> {})",
                group.name,
                self.baseline.groups[g].size(),
                self.baseline_policy.threshold(g),
                self.constrained_policy.threshold(g)
            );
            let _ = writeln!(
                s,
                "  {:<16}{:>12}{:>12}{:>12}  flag",
                "statistic", "before", "after", "delta"
            );
            for d in &group.deltas {
                let flag = match d.flag {
                    DeltaFlag::LevelledDown => "LEVELLED DOWN",
                    DeltaFlag::Indeterminate => "indeterminate",
                    DeltaFlag::Clear => "ok",
                    DeltaFlag::NotMonitored => "",
                };
                let delta = d.delta.map_or_else(|| "undefined".to_owned(), |x| format!("{x:+.4}"));
                let _ = writeln!(
                    s,
                    "  {:<16}{:>12}{:>12}{:>12}  {flag}",
                    d.statistic.as_str(),
                    cell(d.before),
                    cell(d.after),
                    delta
                );
            }
        }
        let _ = writeln!(s, "\nFlagged harms");
        if self.levelled_down_groups.is_empty() {
            let _ = writeln!(s, "  none");
        }
        for f in &self.levelled_down_groups {
            let _ = writeln!(s, "  {} {}: {:+.4}", f.name, f.statistic, f.delta);
        }
        for h in &self.harm_annotations {
            if let Some(harm) = &h.harm {
                let _ = writeln!(s, "  {}: harm: {harm}", h.statistic);
            }
            if let Some(remedy) = &h.remedy {
                let _ = writeln!(s, "  {}: remedy: {remedy}", h.statistic);
            }
            if let Some(caveat) = &h.caveat {
                let _ = writeln!(s, "  note: {caveat}");
            }
        }
        for i in &self.indeterminate {
            let _ = writeln!(
                s,
                "  {} {}: indeterminate (before {}, after {})",
                i.name,
                i.statistic,
                cell(i.before),
                cell(i.after)
            );
        }
        s
    }
}
