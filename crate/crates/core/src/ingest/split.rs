use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::LabeledDataset;
use crate::error::{Error, Result};

/// Disjoint train/evaluation partitions. Indices refer to the source dataset
/// and are ascending, so row order is preserved inside each partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub train: LabeledDataset,
    pub eval: LabeledDataset,
    pub train_indices: Vec<usize>,
    pub eval_indices: Vec<usize>,
    /// `(group, label)` cells with a single member; that row went to train.
    pub singleton_cells: Vec<(usize, bool)>,
}

/// Stratified split on `(group, label)` cells.
///
/// Each cell of size `n >= 2` sends `clamp(round(n * eval_fraction), 1, n - 1)`
/// rows to evaluation, so it shows up on both sides.
pub fn split(dataset: &LabeledDataset, eval_fraction: f64, seed: u64) -> Result<Partition> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(Error::InvalidDataset(format!(
            "eval_fraction {eval_fraction} must lie strictly inside (0, 1)"
        )));
    }
    let mut cells: BTreeMap<(usize, bool), Vec<usize>> = BTreeMap::new();
    for (i, row) in dataset.rows().iter().enumerate() {
        cells.entry((row.group, row.label)).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut eval = Vec::new();
    let mut singleton_cells = Vec::new();
    for (key, mut members) in cells {
        let n = members.len();
        if n == 1 {
            log::warn!(
                "group {} label {} has a single row; it is kept in the training partition",
                dataset.group_names()[key.0],
                u8::from(key.1)
            );
            singleton_cells.push(key);
            train.push(members[0]);
            continue;
        }
        members.shuffle(&mut rng);
        let n_eval = ((n as f64 * eval_fraction).round() as usize).clamp(1, n - 1);
        eval.extend_from_slice(&members[..n_eval]);
        train.extend_from_slice(&members[n_eval..]);
    }
    train.sort_unstable();
    eval.sort_unstable();

    Ok(Partition {
        train: dataset.subset(&train)?,
        eval: dataset.subset(&eval)?,
        train_indices: train,
        eval_indices: eval,
        singleton_cells,
    })
}
