//! Stagewise least-squares gradient boosting with shrinkage.
//!
//! Each round fits a depth-capped regression tree to the current residuals
//! and adds `learning_rate` times its prediction. The recorded training
//! mean-squared-error curve is non-increasing by construction: a round
//! whose tree fails to lower the measured training error is dropped and
//! boosting stops there (the residuals are at a fixed point the trees can
//! no longer improve).

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::features::FeatureMatrix;
use crate::Result;

use super::tree::{grow_tree, TreeParams};
use super::{EnsembleKind, TreeEnsembleModel};

/// Boosting hyperparameters. The seed is carried into the model for
/// provenance; the algorithm itself is deterministic (full-sample trees,
/// all columns considered at every split).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_trees: 200,
            max_depth: 3,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

/// Fits a boosted-tree ensemble on the full sample.
///
/// The base prediction is the target mean; up to `n_trees` trees follow.
pub fn fit_boost(x: &FeatureMatrix, y: &[f64], params: &BoostParams) -> Result<TreeEnsembleModel> {
    if y.len() != x.n_rows() {
        return Err(Error::domain(format!(
            "target has {} values for {} feature rows",
            y.len(),
            x.n_rows()
        )));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite target value {bad}")));
    }
    if params.n_trees == 0 {
        return Err(Error::domain("boosting needs at least one tree"));
    }
    if params.max_depth == 0 {
        return Err(Error::domain("tree depth must be at least 1"));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::domain(format!(
            "learning rate must lie in (0, 1]; got {}",
            params.learning_rate
        )));
    }

    let n = x.n_rows();
    let rows: Vec<usize> = (0..n).collect();
    let all_columns: Vec<usize> = (0..x.n_cols()).collect();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: 1,
    };

    let base = y.iter().sum::<f64>() / n as f64;
    let mut residual: Vec<f64> = y.iter().map(|v| v - base).collect();
    let mut training_mse = vec![mse(&residual)];
    let mut trees = Vec::with_capacity(params.n_trees);

    for round in 0..params.n_trees {
        let tree = grow_tree(x, &residual, &rows, &tree_params, &mut || {
            all_columns.clone()
        });
        let candidate: Vec<f64> = (0..n)
            .map(|i| residual[i] - params.learning_rate * tree.predict_row(x.row(i)))
            .collect();
        let candidate_mse = mse(&candidate);
        let last = *training_mse.last().expect("curve starts with the base");
        // Keep the first tree unconditionally (an ensemble has at least one
        // tree); afterwards stop as soon as a round stops helping.
        if round > 0 && candidate_mse >= last {
            break;
        }
        residual = candidate;
        training_mse.push(candidate_mse);
        trees.push(tree);
    }

    Ok(TreeEnsembleModel {
        kind: EnsembleKind::Boost,
        trees,
        learning_rate: params.learning_rate,
        base_prediction: base,
        seed: params.seed,
        columns: x.column_names().to_vec(),
        training_mse,
    })
}

fn mse(residual: &[f64]) -> f64 {
    residual.iter().map(|r| r * r).sum::<f64>() / residual.len() as f64
}
