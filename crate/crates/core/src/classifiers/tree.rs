//! CART-style binary decision tree: Gini impurity, best-first growth, hard
//! cap on the number of internal splits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Label, PairFeatureRow};
use crate::scalar::Real;

use super::{FeatureScaler, ModelKind, ModelParams, TrainedModel};

/// Split cap, a coarse composable / non-composable distinction.
pub const DEFAULT_MAX_SPLITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum TreeNode<T> {
    Split {
        feature: usize,
        threshold: T,
        /// Index of the child taking `x[feature] <= threshold`.
        left: usize,
        right: usize,
    },
    Leaf {
        n: usize,
        positive_fraction: T,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams<T> {
    pub nodes: Vec<TreeNode<T>>,
    pub max_splits: usize,
    pub split_count: usize,
}

/// Gini impurity of a label subset times its size (unnormalized, so split
/// gains add up without reweighting).
fn weighted_gini<T: Real>(pos: usize, total: usize) -> T {
    if total == 0 {
        return T::zero();
    }
    let n = T::from_usize(total).expect("count");
    let p = T::from_usize(pos).expect("count") / n;
    let q = T::one() - p;
    n * (T::one() - p * p - q * q)
}

struct BestSplit<T> {
    gain: T,
    feature: usize,
    threshold: T,
}

/// Exhaustive best split of a node: every feature, thresholds at midpoints
/// of consecutive distinct values. Returns None when no split strictly
/// reduces the weighted Gini.
fn best_split<T: Real>(xs: &[Vec<T>], ys: &[bool], indices: &[usize]) -> Option<BestSplit<T>> {
    let total = indices.len();
    if total < 2 {
        return None;
    }
    let pos_total = indices.iter().filter(|&&i| ys[i]).count();
    if pos_total == 0 || pos_total == total {
        return None;
    }
    let parent = weighted_gini::<T>(pos_total, total);
    let mut best: Option<BestSplit<T>> = None;
    let n_features = xs[indices[0]].len();
    let mut order: Vec<usize> = Vec::with_capacity(total);

    for feature in 0..n_features {
        order.clear();
        order.extend_from_slice(indices);
        order.sort_by(|&a, &b| {
            xs[a][feature]
                .partial_cmp(&xs[b][feature])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut left_pos = 0usize;
        for k in 0..total - 1 {
            if ys[order[k]] {
                left_pos += 1;
            }
            let a = xs[order[k]][feature];
            let b = xs[order[k + 1]][feature];
            if a == b {
                continue;
            }
            let left_n = k + 1;
            let right_n = total - left_n;
            let right_pos = pos_total - left_pos;
            let children = weighted_gini::<T>(left_pos, left_n)
                + weighted_gini::<T>(right_pos, right_n);
            let gain = parent - children;
            if gain > T::of(1e-12)
                && best
                    .as_ref()
                    .map(|b| gain > b.gain)
                    .unwrap_or(true)
            {
                best = Some(BestSplit {
                    gain,
                    feature,
                    threshold: (a + b) / T::of(2.0),
                });
            }
        }
    }
    best
}

fn leaf_for<T: Real>(ys: &[bool], indices: &[usize]) -> TreeNode<T> {
    let pos = indices.iter().filter(|&&i| ys[i]).count();
    TreeNode::Leaf {
        n: indices.len(),
        positive_fraction: T::from_usize(pos).expect("count")
            / T::from_usize(indices.len().max(1)).expect("count"),
    }
}

/// Trains the capped tree. Single-class data yields a constant classifier
/// with a warning note.
pub fn train_tree<T: Real>(
    rows: &[PairFeatureRow<T>],
    max_splits: usize,
) -> Result<TrainedModel<T>> {
    if rows.is_empty() {
        return Err(Error::InsufficientData {
            found: 0,
            required: 1,
        });
    }
    if max_splits == 0 {
        return Err(Error::InvalidConfig("max_splits must be positive".into()));
    }
    let scaler = FeatureScaler::fit(rows)?;
    let xs = scaler.transform_rows(rows);
    let ys: Vec<bool> = rows
        .iter()
        .map(|r| r.label.map(Label::is_positive).ok_or(Error::UnlabeledRow))
        .collect::<Result<_>>()?;

    let mut notes = Vec::new();
    let pos = ys.iter().filter(|&&y| y).count();
    if pos == 0 || pos == ys.len() {
        notes.push(
            "training data contains a single class; tree degenerates to a constant classifier"
                .to_owned(),
        );
    }

    let mut nodes: Vec<TreeNode<T>> = vec![leaf_for(&ys, &(0..rows.len()).collect::<Vec<_>>())];
    // Leaves still eligible for splitting, with their row sets.
    let mut frontier: Vec<(usize, Vec<usize>)> = vec![(0, (0..rows.len()).collect())];
    let mut split_count = 0usize;

    while split_count < max_splits {
        // Best-first: pick the frontier leaf with the largest gain.
        let mut chosen: Option<(usize, BestSplit<T>)> = None;
        for (slot, (_, indices)) in frontier.iter().enumerate() {
            if let Some(split) = best_split(&xs, &ys, indices) {
                let better = chosen
                    .as_ref()
                    .map(|(_, b)| split.gain > b.gain)
                    .unwrap_or(true);
                if better {
                    chosen = Some((slot, split));
                }
            }
        }
        let Some((slot, split)) = chosen else {
            break; // no strictly improving split anywhere
        };
        let (node_idx, indices) = frontier.swap_remove(slot);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| xs[i][split.feature] <= split.threshold);
        let left_idx = nodes.len();
        nodes.push(leaf_for(&ys, &left_rows));
        let right_idx = nodes.len();
        nodes.push(leaf_for(&ys, &right_rows));
        nodes[node_idx] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_idx,
            right: right_idx,
        };
        frontier.push((left_idx, left_rows));
        frontier.push((right_idx, right_rows));
        split_count += 1;
    }

    let params = TreeParams {
        nodes,
        max_splits,
        split_count,
    };
    Ok(TrainedModel::assemble(
        ModelKind::Tree,
        scaler,
        ModelParams::Tree(params),
        notes,
    ))
}

/// Root-to-leaf walk; the score is the leaf's positive fraction.
pub fn predict<T: Real>(params: &TreeParams<T>, x: &[T]) -> (Label, T) {
    let mut idx = 0;
    loop {
        match &params.nodes[idx] {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                idx = if x[*feature] <= *threshold { *left } else { *right };
            }
            TreeNode::Leaf {
                positive_fraction, ..
            } => {
                return (
                    Label::from_bool(*positive_fraction >= T::of(0.5)),
                    *positive_fraction,
                );
            }
        }
    }
}
