//! Greedy least-squares regression trees (shared by boosting and the
//! random forest).
//!
//! Split search: for every candidate column, midpoints between consecutive
//! distinct values are scored by the post-split residual sum of squares.
//! Only strict improvements are accepted, and columns/thresholds are
//! scanned in ascending order, so ties resolve to the lowest column index
//! and then the lowest threshold. Rows with `value ≤ threshold` go left.
//! Leaf values are member means clamped to the member range, which keeps
//! every ensemble prediction inside the training target range.

use super::TreeNode;
use crate::features::FeatureMatrix;

pub(super) struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

/// Grows a tree on `rows` (indices into `x`/`targets`, duplicates allowed
/// for bootstrap samples). `columns_for_split` supplies the candidate
/// columns for each split node in deterministic growth order (depth-first,
/// left before right); it must return ascending column indices.
pub(super) fn grow_tree(
    x: &FeatureMatrix,
    targets: &[f64],
    rows: &[usize],
    params: &TreeParams,
    columns_for_split: &mut dyn FnMut() -> Vec<usize>,
) -> TreeNode {
    debug_assert!(!rows.is_empty(), "a tree needs at least one row");
    grow(x, targets, rows.to_vec(), 0, params, columns_for_split)
}

fn grow(
    x: &FeatureMatrix,
    targets: &[f64],
    rows: Vec<usize>,
    depth: usize,
    params: &TreeParams,
    columns_for_split: &mut dyn FnMut() -> Vec<usize>,
) -> TreeNode {
    if depth >= params.max_depth || rows.len() < 2 * params.min_leaf {
        return leaf(targets, &rows);
    }
    let candidates = columns_for_split();
    debug_assert!(
        candidates.windows(2).all(|w| w[0] < w[1]),
        "candidate columns must be ascending"
    );
    match best_split(x, targets, &rows, &candidates, params.min_leaf) {
        None => leaf(targets, &rows),
        Some(split) => {
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .into_iter()
                .partition(|&r| x.row(r)[split.column] <= split.threshold);
            let left = grow(x, targets, left_rows, depth + 1, params, columns_for_split);
            let right = grow(x, targets, right_rows, depth + 1, params, columns_for_split);
            TreeNode::Split {
                column: split.column,
                threshold: split.threshold,
                left: Box::new(left),
                right: Box::new(right),
            }
        }
    }
}

fn leaf(targets: &[f64], rows: &[usize]) -> TreeNode {
    let mut sum = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r in rows {
        let t = targets[r];
        sum += t;
        lo = lo.min(t);
        hi = hi.max(t);
    }
    // The float mean can drift a hair outside the member range; clamp so
    // predictions are always attainable target values between members.
    let value = (sum / rows.len() as f64).clamp(lo, hi);
    TreeNode::Leaf { value }
}

struct Split {
    column: usize,
    threshold: f64,
}

fn best_split(
    x: &FeatureMatrix,
    targets: &[f64],
    rows: &[usize],
    candidates: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = rows.len();
    // A split must strictly beat leaving the node whole, so constant-target
    // nodes (parent SSE equal to any child sum) stay leaves.
    let mut parent1 = 0.0;
    let mut parent2 = 0.0;
    for &r in rows {
        let t = targets[r];
        parent1 += t;
        parent2 += t * t;
    }
    let mut best_sse = parent2 - parent1 * parent1 / n as f64;
    let mut best: Option<Split> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);

    for &column in candidates {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x.row(r)[column], targets[r])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

        // Prefix sums of targets and squared targets in value order.
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let prefixes: Vec<(f64, f64)> = pairs
            .iter()
            .map(|&(_, t)| {
                s1 += t;
                s2 += t * t;
                (s1, s2)
            })
            .collect();
        let (total1, total2) = prefixes[n - 1];

        for k in min_leaf..=(n - min_leaf) {
            if k == n {
                break;
            }
            let (lo_v, hi_v) = (pairs[k - 1].0, pairs[k].0);
            if lo_v == hi_v {
                continue; // no threshold separates equal values
            }
            let (l1, l2) = prefixes[k - 1];
            let left_sse = l2 - l1 * l1 / k as f64;
            let r1 = total1 - l1;
            let r2 = total2 - l2;
            let right_sse = r2 - r1 * r1 / (n - k) as f64;
            let sse = left_sse + right_sse;
            if sse < best_sse {
                // Midpoint, falling back to the lower value when the two
                // are adjacent floats so `≤ threshold` still splits them.
                let mut threshold = lo_v + (hi_v - lo_v) / 2.0;
                if threshold >= hi_v {
                    threshold = lo_v;
                }
                best_sse = sse;
                best = Some(Split { column, threshold });
            }
        }
    }
    best
}
