use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{DataError, DatasetSplit, Label, Result, SplitName};

/// Deterministic stratified k-fold partition.
///
/// Returns `k` pairs `(train_part, holdout_part)`. Holdouts are disjoint and
/// cover the split; fold sizes differ by at most one; per-fold class counts
/// stay within one sample of the split's class ratio.
pub fn kfold_partition(
    split: &DatasetSplit,
    k: usize,
    seed: u64,
) -> Result<Vec<(DatasetSplit, DatasetSplit)>> {
    let n = split.len();
    if k < 2 || k > n {
        return Err(DataError::KfoldArgument { k, n });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; n];
    let mut fold_sizes = vec![0usize; k];

    // Deal each class separately: every fold gets floor(n_c/k) items, and the
    // remainders go to the currently smallest folds.
    for class in [Label::Fake, Label::Real] {
        let mut indices: Vec<usize> = split
            .posts()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.label == class)
            .map(|(i, _)| i)
            .collect();
        indices.shuffle(&mut rng);

        let base = indices.len() / k;
        let remainder = indices.len() % k;

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&f| (fold_sizes[f], f));
        let bonus_folds: Vec<usize> = order.into_iter().take(remainder).collect();

        let mut cursor = 0usize;
        for fold in 0..k {
            let take = base + usize::from(bonus_folds.contains(&fold));
            for &idx in &indices[cursor..cursor + take] {
                fold_of[idx] = fold;
                fold_sizes[fold] += 1;
            }
            cursor += take;
        }
    }

    let mut result = Vec::with_capacity(k);
    for fold in 0..k {
        let mut train_idx = Vec::with_capacity(n - fold_sizes[fold]);
        let mut holdout_idx = Vec::with_capacity(fold_sizes[fold]);
        for i in 0..n {
            if fold_of[i] == fold {
                holdout_idx.push(i);
            } else {
                train_idx.push(i);
            }
        }
        result.push((
            split.select(&train_idx, SplitName::Custom)?,
            split.select(&holdout_idx, SplitName::Custom)?,
        ));
    }
    Ok(result)
}
