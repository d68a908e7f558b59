#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use levelup_core::ingest::{load_csv, split, CsvSchema, LabeledDataset};
use levelup_core::policy::{Constraint, GroupGrid, REJECT_ALL};
use levelup_core::scorer::{fit, predict, ScoredDataset, ScoredRow, ScorerConfig};
use levelup_core::{FairnessMeasure, Statistic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SPLIT_SEED: u64 = 20_240_601;
pub const EVAL_FRACTION: f64 = 0.3;

pub fn adult_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/adult_extract.csv")
}

pub fn adult_schema() -> CsvSchema {
    CsvSchema::new(
        "income",
        ">50K",
        "sex",
        &[
            "age",
            "workclass",
            "education-num",
            "marital-status",
            "occupation",
            "relationship",
            "race",
            "sex",
            "capital-gain",
            "capital-loss",
            "hours-per-week",
        ],
    )
}

pub fn adult() -> &'static LabeledDataset {
    static DATA: OnceLock<LabeledDataset> = OnceLock::new();
    DATA.get_or_init(|| load_csv(adult_path(), &adult_schema()).expect("fixture loads"))
}

/// Scorer fitted on the training split, scores on that same split.
pub fn adult_train_scored() -> &'static ScoredDataset {
    static SCORED: OnceLock<ScoredDataset> = OnceLock::new();
    SCORED.get_or_init(|| {
        let parts = split(adult(), EVAL_FRACTION, SPLIT_SEED).expect("split");
        let scorer = fit(&parts.train, &ScorerConfig::default()).expect("fit");
        predict(&scorer, &parts.train).expect("predict")
    })
}

/// Size of the statistic's jump between candidate `k` and its neighbour
/// `k + dir` on group `g`'s grid; zero off the grid or where undefined.
pub fn local_step(scored: &ScoredDataset, g: usize, threshold: f64, stat: Statistic, dir: isize) -> f64 {
    let grid = GroupGrid::build(scored, g);
    let k = grid
        .thresholds
        .iter()
        .position(|&t| t == threshold)
        .expect("threshold on grid");
    let j = k as isize + dir;
    if j < 0 || j as usize >= grid.len() {
        return 0.0;
    }
    match (stat.of(&grid.counts[k]), stat.of(&grid.counts[j as usize])) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => 0.0,
    }
}

/// Largest jump of `stat` between adjacent candidates anywhere on the grid.
pub fn max_step(scored: &ScoredDataset, g: usize, stat: Statistic) -> f64 {
    let grid = GroupGrid::build(scored, g);
    grid.counts
        .windows(2)
        .filter_map(|w| Some((stat.of(&w[0])? - stat.of(&w[1])?).abs()))
        .fold(0.0, f64::max)
}

/// Two groups, each with at most `max_levels` distinct scores.
pub fn random_two_group(seed: u64, max_levels: usize) -> ScoredDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for g in 0..2 {
        let levels = rng.random_range(1..=max_levels);
        let palette: Vec<f64> = (0..levels).map(|_| rng.random_range(0..=20) as f64 / 20.0).collect();
        let n = rng.random_range(3..=25);
        for _ in 0..n {
            let score = palette[rng.random_range(0..palette.len())];
            let label = rng.random::<f64>() < 0.15 + 0.7 * score;
            rows.push(ScoredRow { score, label, group: g });
        }
    }
    ScoredDataset::new(rows, vec!["g0".into(), "g1".into()]).expect("valid random dataset")
}

// ---- brute-force oracle -------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn oracle_stat(stat: Statistic, t: &Tally) -> Option<f64> {
    let n = t.tp + t.fp + t.tn + t.fn_;
    match stat {
        Statistic::SelectionRate => ratio(t.tp + t.fp, n),
        Statistic::Tpr => ratio(t.tp, t.tp + t.fn_),
        Statistic::Fnr => ratio(t.fn_, t.tp + t.fn_),
        Statistic::Tnr => ratio(t.tn, t.tn + t.fp),
        Statistic::Fpr => ratio(t.fp, t.tn + t.fp),
        Statistic::Precision => ratio(t.tp, t.tp + t.fp),
        Statistic::Npv => ratio(t.tn, t.tn + t.fn_),
        Statistic::Accuracy => ratio(t.tp + t.tn, n),
        Statistic::FnFpRatio => ratio(t.fn_, t.fp),
    }
}

pub fn oracle_measure_stats(measure: FairnessMeasure) -> Vec<Statistic> {
    use FairnessMeasure::*;
    match measure {
        DemographicParity => vec![Statistic::SelectionRate],
        EqualOpportunity => vec![Statistic::Tpr],
        PredictiveParity => vec![Statistic::Precision],
        FalsePositiveErrorRateBalance => vec![Statistic::Tnr],
        EqualizedOdds => vec![Statistic::Tpr, Statistic::Fpr],
        ConditionalUseAccuracyEquality => vec![Statistic::Precision, Statistic::Npv],
        OverallAccuracyEquality => vec![Statistic::Accuracy],
        TreatmentEquality => vec![Statistic::FnFpRatio],
    }
}

pub fn tally(scored: &ScoredDataset, g: usize, threshold: f64) -> Tally {
    let mut t = Tally::default();
    for r in scored.rows().iter().filter(|r| r.group == g) {
        match (r.score >= threshold, r.label) {
            (true, true) => t.tp += 1,
            (true, false) => t.fp += 1,
            (false, false) => t.tn += 1,
            (false, true) => t.fn_ += 1,
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleBest {
    pub tallies: Vec<Tally>,
    pub correct: usize,
}

/// Exhaustive optimum over every pair of per-group thresholds, taking the
/// distinct scores themselves (plus a reject-everything value) as thresholds.
pub fn brute_force(scored: &ScoredDataset, constraint: &Constraint) -> Option<OracleBest> {
    let thresholds: Vec<Vec<f64>> = (0..2)
        .map(|g| {
            let mut s: Vec<f64> = scored.rows().iter().filter(|r| r.group == g).map(|r| r.score).collect();
            s.sort_by(f64::total_cmp);
            s.dedup();
            s.push(REJECT_ALL);
            s
        })
        .collect();
    let tie_stats = match *constraint {
        Constraint::Unconstrained => vec![Statistic::SelectionRate],
        Constraint::Equality { measure, .. } => oracle_measure_stats(measure),
        Constraint::MinimumRate { statistic, .. } | Constraint::MaximumRate { statistic, .. } => vec![statistic],
    };

    type Key = (usize, f64, f64, usize, usize);
    let mut best: Option<(Key, Vec<Tally>)> = None;
    for (i, &t0) in thresholds[0].iter().enumerate() {
        for (j, &t1) in thresholds[1].iter().enumerate() {
            let ts = vec![tally(scored, 0, t0), tally(scored, 1, t1)];
            let spread = |stat: Statistic| -> Option<f64> {
                let a = oracle_stat(stat, &ts[0])?;
                let b = oracle_stat(stat, &ts[1])?;
                Some((a - b).abs())
            };
            let disparity = tie_stats
                .iter()
                .map(|&s| spread(s))
                .try_fold(0.0f64, |m, d| Some(m.max(d?)));
            let feasible = match *constraint {
                Constraint::Unconstrained => true,
                Constraint::Equality { epsilon, .. } => disparity.is_some_and(|d| d <= epsilon),
                Constraint::MinimumRate { statistic, tau } => {
                    ts.iter().all(|t| oracle_stat(statistic, t).is_some_and(|v| v >= tau))
                }
                Constraint::MaximumRate { statistic, kappa } => {
                    ts.iter().all(|t| oracle_stat(statistic, t).is_some_and(|v| v <= kappa))
                }
            };
            if !feasible {
                continue;
            }
            let correct = ts.iter().map(|t| t.tp + t.tn).sum();
            let min_value = match (oracle_stat(tie_stats[0], &ts[0]), oracle_stat(tie_stats[0], &ts[1])) {
                (Some(a), Some(b)) => a.min(b),
                _ => f64::NEG_INFINITY,
            };
            let key: Key = (correct, disparity.unwrap_or(f64::INFINITY), min_value, i, j);
            let better = match &best {
                None => true,
                Some((b, _)) => {
                    key.0 > b.0
                        || (key.0 == b.0 && key.1 < b.1)
                        || (key.0 == b.0 && key.1 == b.1 && key.2 > b.2)
                        || (key.0 == b.0 && key.1 == b.1 && key.2 == b.2 && (key.3, key.4) < (b.3, b.4))
                }
            };
            if better {
                best = Some((key, ts));
            }
        }
    }
    best.map(|(key, tallies)| OracleBest {
        tallies,
        correct: key.0,
    })
}

/// Every constraint kind with a few parameter draws.
pub fn constraint_suite(rng: &mut ChaCha8Rng) -> Vec<Constraint> {
    let mut out = vec![Constraint::Unconstrained];
    for measure in FairnessMeasure::ALL {
        if measure.enforceable() {
            let epsilon = [0.0, 0.05, 0.1, 0.25][rng.random_range(0..4)];
            out.push(Constraint::Equality { measure, epsilon });
        }
    }
    for statistic in [
        Statistic::SelectionRate,
        Statistic::Tpr,
        Statistic::Tnr,
        Statistic::Precision,
    ] {
        out.push(Constraint::MinimumRate {
            statistic,
            tau: rng.random_range(0..=10) as f64 / 10.0,
        });
    }
    out.push(Constraint::MaximumRate {
        statistic: Statistic::SelectionRate,
        kappa: rng.random_range(0..=10) as f64 / 10.0,
    });
    out
}

/// Non-dominated subset by direct pairwise comparison.
pub fn pareto_oracle(points: &[(f64, f64)], maximize_objective: bool) -> Vec<usize> {
    let better_eq = |a: f64, b: f64| if maximize_objective { a >= b } else { a <= b };
    let better = |a: f64, b: f64| if maximize_objective { a > b } else { a < b };
    (0..points.len())
        .filter(|&i| {
            let p = points[i];
            !points
                .iter()
                .any(|&q| q.0 >= p.0 && better_eq(q.1, p.1) && (q.0 > p.0 || better(q.1, p.1)))
        })
        .collect()
}
