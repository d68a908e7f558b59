use serde::{Deserialize, Serialize};

use super::ScoredDataset;
use crate::error::{Error, Result};

/// One equal-width score bin. Empty bins carry `count == 0` and no means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub mean_score: Option<f64>,
    pub positive_fraction: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    /// `None` for the pooled table.
    pub group: Option<usize>,
    pub bins: Vec<CalibrationBin>,
}

impl CalibrationTable {
    /// Largest `|mean score - positive fraction|` over nonempty bins.
    pub fn max_gap(&self) -> f64 {
        self.bins
            .iter()
            .filter_map(|b| Some((b.mean_score? - b.positive_fraction?).abs()))
            .fold(0.0, f64::max)
    }
}

/// Reliability table over `bins` equal-width bins of `[0, 1]`. Bin `k`
/// holds scores in `[k/bins, (k+1)/bins)`, the last bin also holds 1.0.
/// With `per_group` set, one table is returned per group id, otherwise a
/// single pooled table.
pub fn calibration_table(scored: &ScoredDataset, bins: usize, per_group: bool) -> Result<Vec<CalibrationTable>> {
    if bins < 2 {
        return Err(Error::InvalidSpec(format!("need at least 2 bins, got {bins}")));
    }
    let groups: Vec<Option<usize>> = if per_group {
        (0..scored.num_groups()).map(Some).collect()
    } else {
        vec![None]
    };
    Ok(groups
        .into_iter()
        .map(|group| {
            let mut sum_score = vec![0.0; bins];
            let mut positives = vec![0usize; bins];
            let mut counts = vec![0usize; bins];
            for r in scored.rows().iter().filter(|r| group.is_none_or(|g| r.group == g)) {
                let k = ((r.score * bins as f64) as usize).min(bins - 1);
                sum_score[k] += r.score;
                positives[k] += usize::from(r.label);
                counts[k] += 1;
            }
            let bins = (0..bins)
                .map(|k| {
                    let n = counts[k];
                    CalibrationBin {
                        lower: k as f64 / bins as f64,
                        upper: (k + 1) as f64 / bins as f64,
                        mean_score: (n > 0).then(|| sum_score[k] / n as f64),
                        positive_fraction: (n > 0).then(|| positives[k] as f64 / n as f64),
                        count: n,
                    }
                })
                .collect();
            CalibrationTable { group, bins }
        })
        .collect())
}
