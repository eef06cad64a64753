//! Regression learners over attitude feature matrices: ordinary least
//! squares, L1-penalized least squares, gradient-boosted trees, and a
//! random forest, plus k-fold cross-validation for hyperparameter choice.
//!
//! All fitted models serialize to JSON with explicit structure (linear
//! weights by column name; trees as nested split/leaf nodes) and predict
//! through a common [`Predictor`] interface that verifies the scoring
//! matrix has the training columns in the training order.

mod boost;
mod cv;
mod forest;
mod linear;
mod tree;

pub use boost::{fit_boost, BoostParams};
pub use cv::{cross_validate, CvReport, FoldMode};
pub use forest::{fit_forest, ForestParams};
pub use linear::{fit_lasso, fit_ols, lambda_grid, lambda_max};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::features::FeatureMatrix;
use crate::series::DatedSeries;
use crate::Result;

/// A linear prediction rule on the original (unstandardized) feature scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    /// One weight per training column, in column order.
    pub weights: Vec<f64>,
    /// L1 penalty strength used at fit time (0 for plain least squares).
    pub regularization: f64,
    /// Training column names; scoring data must match them exactly.
    pub columns: Vec<String>,
}

/// A binary regression tree stored explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        column: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    /// Routes a row down the tree; values `≤ threshold` go left.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            TreeNode::Leaf { value } => *value,
            TreeNode::Split {
                column,
                threshold,
                left,
                right,
            } => {
                if row[*column] <= *threshold {
                    left.predict_row(row)
                } else {
                    right.predict_row(row)
                }
            }
        }
    }

    /// Number of nodes (splits + leaves).
    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }
}

/// Which aggregation rule a tree ensemble uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Additive stagewise ensemble: `base + learning_rate · Σ trees`.
    Boost,
    /// Bagged ensemble: order-independent mean of per-tree predictions.
    RandomForest,
}

/// A fitted tree ensemble.
///
/// `learning_rate` and `base_prediction` drive the boost aggregation rule
/// and are ignored for `random_forest` (stored as 1.0 / 0.0 there).
/// `training_mse` records the boost training-error curve (base model first,
/// then one entry per accepted tree); empty for forests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    pub kind: EnsembleKind,
    pub trees: Vec<TreeNode>,
    pub learning_rate: f64,
    pub base_prediction: f64,
    pub seed: u64,
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub training_mse: Vec<f64>,
}

/// Anything that can score a feature row after column verification.
pub trait Predictor {
    /// Training column names, in training order.
    fn feature_columns(&self) -> &[String];
    /// Scores one row whose cells follow [`feature_columns`](Self::feature_columns).
    fn predict_row(&self, row: &[f64]) -> f64;
}

impl Predictor for LinearModel {
    fn feature_columns(&self) -> &[String] {
        &self.columns
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut value = self.intercept;
        for (w, v) in self.weights.iter().zip(row) {
            value += w * v;
        }
        value
    }
}

impl Predictor for TreeEnsembleModel {
    fn feature_columns(&self) -> &[String] {
        &self.columns
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match self.kind {
            EnsembleKind::Boost => {
                let mut sum = 0.0;
                for tree in &self.trees {
                    sum += tree.predict_row(row);
                }
                self.base_prediction + self.learning_rate * sum
            }
            EnsembleKind::RandomForest => {
                let votes: Vec<f64> = self.trees.iter().map(|t| t.predict_row(row)).collect();
                forest::stable_mean(&votes)
            }
        }
    }
}

/// Scores every row of `x`, returning a series named `prediction` over the
/// matrix dates. The matrix columns must match the model's training columns
/// by name and order.
pub fn predict<M: Predictor + ?Sized>(model: &M, x: &FeatureMatrix) -> Result<DatedSeries> {
    if x.column_names() != model.feature_columns() {
        return Err(Error::domain(format!(
            "feature columns {:?} do not match training columns {:?} (name and order)",
            x.column_names(),
            model.feature_columns()
        )));
    }
    let values = (0..x.n_rows()).map(|i| model.predict_row(x.row(i))).collect();
    DatedSeries::new(x.start_date(), "prediction", values)
}

#[cfg(test)]
pub(crate) mod test_support {
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    use crate::features::FeatureMatrix;

    pub(crate) fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 1, 2).expect("valid date")
    }

    /// Random matrix with standard-normal cells and columns c0..c{k-1}.
    pub(crate) fn gaussian_matrix(n: usize, k: usize, seed: u64) -> (FeatureMatrix, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let names = (0..k).map(|j| format!("c{j}")).collect();
        (
            FeatureMatrix::new(start(), names, rows).expect("valid matrix"),
            rng,
        )
    }

    /// Friedman-style nonlinear benchmark with the linear terms shrunk so a
    /// linear fit genuinely fails: dominated by the sine interaction and the
    /// centered quadratic, which least squares cannot represent.
    pub(crate) fn friedman(n: usize, seed: u64, noise: f64) -> (FeatureMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unif = Uniform::new(0.0f64, 1.0);
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..10).map(|_| unif.sample(&mut rng)).collect();
            let eps: f64 = StandardNormal.sample(&mut rng);
            y.push(
                10.0 * (std::f64::consts::PI * row[0] * row[1]).sin()
                    + 20.0 * (row[2] - 0.5).powi(2)
                    + 2.0 * row[3]
                    + row[4]
                    + noise * eps,
            );
            rows.push(row);
        }
        let names = (0..10).map(|j| format!("x{j}")).collect();
        (
            FeatureMatrix::new(start(), names, rows).expect("valid matrix"),
            y,
        )
    }

    pub(crate) fn linear_response(
        x: &FeatureMatrix,
        intercept: f64,
        weights: &[f64],
        noise: f64,
        rng: &mut ChaCha8Rng,
    ) -> Vec<f64> {
        (0..x.n_rows())
            .map(|i| {
                let row = x.row(i);
                let mut v = intercept;
                for (w, c) in weights.iter().zip(row) {
                    v += w * c;
                }
                let eps: f64 = rng.sample(StandardNormal);
                v + noise * eps
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 1, 2).expect("valid date")
    }

    fn two_col_matrix() -> FeatureMatrix {
        FeatureMatrix::new(
            start(),
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        )
        .expect("valid matrix")
    }

    #[test]
    fn linear_predict_matches_manual_affine_map() {
        let model = LinearModel {
            intercept: 0.5,
            weights: vec![2.0, -1.0],
            regularization: 0.0,
            columns: vec!["a".into(), "b".into()],
        };
        let pred = predict(&model, &two_col_matrix()).unwrap();
        assert_eq!(pred.values(), &[0.5 + 2.0 - 2.0, 0.5 + 6.0 - 4.0]);
        assert_eq!(pred.name(), "prediction");
        assert_eq!(pred.start_date(), start());
    }

    #[test]
    fn predict_rejects_reordered_columns() {
        let model = LinearModel {
            intercept: 0.0,
            weights: vec![1.0, 1.0],
            regularization: 0.0,
            columns: vec!["b".into(), "a".into()],
        };
        let err = predict(&model, &two_col_matrix()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "got {err:?}");
        assert!(err.to_string().contains("name and order"));
    }

    #[test]
    fn tree_routing_sends_boundary_left() {
        let tree = TreeNode::Split {
            column: 0,
            threshold: 2.0,
            left: Box::new(TreeNode::Leaf { value: -1.0 }),
            right: Box::new(TreeNode::Leaf { value: 1.0 }),
        };
        assert_eq!(tree.predict_row(&[2.0]), -1.0);
        assert_eq!(tree.predict_row(&[2.0 + 1e-12]), 1.0);
        assert_eq!(tree.node_count(), 3);
    }

    #[test]
    fn ensemble_json_round_trip_is_exact() {
        let model = TreeEnsembleModel {
            kind: EnsembleKind::Boost,
            trees: vec![TreeNode::Split {
                column: 1,
                threshold: 0.25,
                left: Box::new(TreeNode::Leaf { value: 0.5 }),
                right: Box::new(TreeNode::Leaf { value: -0.5 }),
            }],
            learning_rate: 0.1,
            base_prediction: 3.0,
            seed: 7,
            columns: vec!["a".into(), "b".into()],
            training_mse: vec![1.0, 0.5],
        };
        let text = serde_json::to_string(&model).unwrap();
        assert!(text.contains("\"kind\":\"boost\""));
        assert!(text.contains("\"node\":\"split\""));
        let back: TreeEnsembleModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
    }
}
