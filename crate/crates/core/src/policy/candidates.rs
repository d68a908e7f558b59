use super::REJECT_ALL;
use crate::metrics::Confusion;
use crate::scorer::ScoredDataset;

/// Every distinct confusion state one group can reach, one threshold each.
///
/// `thresholds` ascend from `0.0` (select everyone) through midpoints between
/// consecutive distinct scores to [`REJECT_ALL`]; `counts[k]` is the group's
/// confusion under `thresholds[k]`. Selection count strictly decreases with `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupGrid {
    pub group: usize,
    pub thresholds: Vec<f64>,
    pub counts: Vec<Confusion>,
}

impl GroupGrid {
    pub fn build(scored: &ScoredDataset, group: usize) -> Self {
        // (score, positives, negatives) per distinct score, ascending
        let mut scores: Vec<(f64, bool)> = scored.group_rows(group).map(|r| (r.score, r.label)).collect();
        scores.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut levels: Vec<(f64, usize, usize)> = Vec::new();
        for (s, label) in scores {
            match levels.last_mut() {
                Some(last) if last.0 == s => {
                    if label {
                        last.1 += 1
                    } else {
                        last.2 += 1
                    }
                }
                _ => levels.push((s, usize::from(label), usize::from(!label))),
            }
        }

        let total_pos: usize = levels.iter().map(|l| l.1).sum();
        let total_neg: usize = levels.iter().map(|l| l.2).sum();
        let mut thresholds = Vec::with_capacity(levels.len() + 1);
        let mut counts = Vec::with_capacity(levels.len() + 1);

        // k-th candidate rejects the k lowest score levels
        let (mut rejected_pos, mut rejected_neg) = (0, 0);
        for k in 0..=levels.len() {
            let t = if k == 0 {
                0.0
            } else if k == levels.len() {
                REJECT_ALL
            } else {
                midpoint(levels[k - 1].0, levels[k].0)
            };
            if k > 0 {
                rejected_pos += levels[k - 1].1;
                rejected_neg += levels[k - 1].2;
            }
            thresholds.push(t);
            counts.push(Confusion {
                tp: total_pos - rejected_pos,
                fp: total_neg - rejected_neg,
                tn: rejected_neg,
                fn_: rejected_pos,
            });
        }
        // a score of exactly 0 is selected by threshold 0, so candidate 0 selects everyone
        Self {
            group,
            thresholds,
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

/// A value strictly above `lo` and at most `hi`, for `lo < hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

/// Ordered candidate thresholds for one group.
pub fn candidate_thresholds(scored: &ScoredDataset, group: usize) -> Vec<f64> {
    GroupGrid::build(scored, group).thresholds
}
