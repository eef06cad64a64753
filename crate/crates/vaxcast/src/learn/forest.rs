//! Random-forest regression: bootstrap-resampled trees with per-split
//! column subsampling, averaged order-independently.
//!
//! Reproducibility contract: tree `t` draws all its randomness from a
//! dedicated stream — `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `t + 1` — so results are bit-identical no matter how trees are scheduled
//! across threads. Averaging sorts the per-tree votes before summing, so
//! predictions are invariant under tree reordering and always stay inside
//! the training target range (each leaf is clamped to its members).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::exec;
use crate::features::FeatureMatrix;
use crate::Result;

use super::tree::{grow_tree, TreeParams};
use super::{EnsembleKind, TreeEnsembleModel};

/// Forest hyperparameters.
///
/// `mtry = None` uses ⌈columns/3⌉. `bootstrap = false` trains every tree on
/// the full sample, so a single-tree forest with `mtry` = all columns and
/// `min_leaf = 1` reduces to a plain regression tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            // Effectively unbounded for daily-scale samples; kept finite so
            // the configuration stays a plain number.
            max_depth: 32,
            min_leaf: 5,
            mtry: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

/// Fits a random forest. Trees are grown independently (in parallel when
/// the `parallel` feature is active) with per-tree RNG streams.
pub fn fit_forest(
    x: &FeatureMatrix,
    y: &[f64],
    params: &ForestParams,
) -> Result<TreeEnsembleModel> {
    let n = x.n_rows();
    let n_cols = x.n_cols();
    if y.len() != n {
        return Err(Error::domain(format!(
            "target has {} values for {n} feature rows",
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite target value {bad}")));
    }
    if params.n_trees == 0 {
        return Err(Error::domain("a forest needs at least one tree"));
    }
    if params.max_depth == 0 {
        return Err(Error::domain("tree depth must be at least 1"));
    }
    if params.min_leaf == 0 {
        return Err(Error::domain("min_leaf must be at least 1"));
    }
    if params.min_leaf >= n {
        return Err(Error::domain(format!(
            "min_leaf ({}) must be smaller than the sample count ({n})",
            params.min_leaf
        )));
    }
    let mtry = match params.mtry {
        Some(m) if m == 0 || m > n_cols => {
            return Err(Error::domain(format!(
                "mtry ({m}) must lie in 1..={n_cols}"
            )));
        }
        Some(m) => m,
        None => n_cols.div_ceil(3),
    };

    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
    };
    let trees = exec::map_range(params.n_trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(t as u64 + 1);
        let rows: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut sampler = || sample_columns(&mut rng, n_cols, mtry);
        grow_tree(x, y, &rows, &tree_params, &mut sampler)
    });

    Ok(TreeEnsembleModel {
        kind: EnsembleKind::RandomForest,
        trees,
        learning_rate: 1.0,
        base_prediction: 0.0,
        seed: params.seed,
        columns: x.column_names().to_vec(),
        training_mse: Vec::new(),
    })
}

/// Draws `mtry` distinct columns (ascending) by a partial Fisher–Yates
/// shuffle. A full draw skips the RNG entirely — the result is all columns
/// either way.
fn sample_columns(rng: &mut ChaCha8Rng, n_cols: usize, mtry: usize) -> Vec<usize> {
    if mtry == n_cols {
        return (0..n_cols).collect();
    }
    let mut idx: Vec<usize> = (0..n_cols).collect();
    for i in 0..mtry {
        let j = rng.gen_range(i..n_cols);
        idx.swap(i, j);
    }
    let mut chosen = idx[..mtry].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Mean that is exactly invariant under permutation of the addends: sorts
/// by total order, sums left to right, and clamps into the addend range.
pub(super) fn stable_mean(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty(), "mean of an empty vote set");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sum: f64 = sorted.iter().sum();
    (sum / sorted.len() as f64).clamp(sorted[0], sorted[sorted.len() - 1])
}
