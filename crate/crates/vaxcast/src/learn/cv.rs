//! K-fold cross-validation over a hyperparameter grid.
//!
//! Folds are contiguous row blocks by default — sensible for daily series,
//! where shuffling would leak neighboring days across the split — with an
//! opt-in shuffled mode. Fold boundaries sit at `⌊i·n/k⌋`, so fold sizes
//! differ by at most one row. The winner is the setting with the smallest
//! mean fold RMSE; exact ties go to the earliest grid index, so callers
//! should order grids from least to most model capacity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::exec;
use crate::features::FeatureMatrix;
use crate::Result;

/// How rows are assigned to folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    /// Contiguous row blocks in date order (default).
    #[default]
    Contiguous,
    /// A seeded permutation is dealt into contiguous blocks.
    Shuffled,
}

/// Cross-validation outcome: the labeled grid, per-setting-per-fold RMSE,
/// and the index of the chosen setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// Human-readable label per grid setting, in grid order.
    pub grid: Vec<String>,
    /// `fold_errors[setting][fold]` = holdout RMSE.
    pub fold_errors: Vec<Vec<f64>>,
    /// Index into `grid` of the winning setting.
    pub chosen: usize,
}

impl CvReport {
    /// Mean fold RMSE per setting, in grid order.
    pub fn mean_errors(&self) -> Vec<f64> {
        self.fold_errors
            .iter()
            .map(|errs| errs.iter().sum::<f64>() / errs.len() as f64)
            .collect()
    }
}

/// Runs k-fold cross-validation of `fit_predict` over `grid`.
///
/// `fit_predict(x_train, y_train, x_test, setting)` must return one
/// prediction per test row. Settings are evaluated independently (in
/// parallel when enabled); everything is deterministic for a fixed seed.
pub fn cross_validate<S, F>(
    x: &FeatureMatrix,
    y: &[f64],
    grid: &[S],
    k: usize,
    mode: FoldMode,
    seed: u64,
    fit_predict: F,
) -> Result<CvReport>
where
    S: std::fmt::Display + Sync,
    F: Fn(&FeatureMatrix, &[f64], &FeatureMatrix, &S) -> Result<Vec<f64>> + Sync,
{
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::domain(format!(
            "target has {} values for {n} feature rows",
            y.len()
        )));
    }
    if grid.is_empty() {
        return Err(Error::domain("cross-validation needs a non-empty grid"));
    }
    if k < 2 {
        return Err(Error::domain("cross-validation needs at least two folds"));
    }
    if n < k {
        return Err(Error::domain(format!(
            "cannot split {n} rows into {k} folds"
        )));
    }

    let order: Vec<usize> = match mode {
        FoldMode::Contiguous => (0..n).collect(),
        FoldMode::Shuffled => {
            let mut idx: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                idx.swap(i, j);
            }
            idx
        }
    };
    let bounds = fold_bounds(n, k);
    let folds: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| {
            let test: Vec<usize> = order[bounds[f]..bounds[f + 1]].to_vec();
            let train: Vec<usize> = order[..bounds[f]]
                .iter()
                .chain(&order[bounds[f + 1]..])
                .copied()
                .collect();
            (train, test)
        })
        .collect();

    let per_setting: Vec<Result<Vec<f64>>> = exec::map_slice(grid, |setting| {
        let mut errors = Vec::with_capacity(k);
        for (fold, (train, test)) in folds.iter().enumerate() {
            let x_train = x.gather_rows(train);
            let y_train: Vec<f64> = train.iter().map(|&r| y[r]).collect();
            let x_test = x.gather_rows(test);
            let preds = fit_predict(&x_train, &y_train, &x_test, setting).map_err(|e| {
                Error::estimation(format!("setting `{setting}`, fold {fold}: {e}"))
            })?;
            if preds.len() != test.len() {
                return Err(Error::estimation(format!(
                    "setting `{setting}`, fold {fold}: {} predictions for {} test rows",
                    preds.len(),
                    test.len()
                )));
            }
            let sq: f64 = preds
                .iter()
                .zip(test.iter().map(|&r| y[r]))
                .map(|(p, a)| (p - a) * (p - a))
                .sum();
            errors.push((sq / test.len() as f64).sqrt());
        }
        Ok(errors)
    });

    let mut fold_errors = Vec::with_capacity(grid.len());
    for result in per_setting {
        fold_errors.push(result?);
    }
    let mut chosen = 0;
    let mut best = f64::INFINITY;
    for (i, errs) in fold_errors.iter().enumerate() {
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        if mean < best {
            best = mean;
            chosen = i;
        }
    }

    Ok(CvReport {
        grid: grid.iter().map(|s| s.to_string()).collect(),
        fold_errors,
        chosen,
    })
}

/// Fold boundaries `⌊i·n/k⌋` for `i = 0..=k`.
fn fold_bounds(n: usize, k: usize) -> Vec<usize> {
    (0..=k).map(|i| i * n / k).collect()
}
