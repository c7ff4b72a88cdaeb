//! CART decision tree with Gini impurity.
//!
//! Splits are searched over the midpoints of adjacent sorted unique feature
//! values; the best (lowest) weighted child impurity wins, with ties going
//! to the lowest feature index and then the lowest threshold. Leaves carry
//! the majority class, ties going to the lexicographically first label.
//! `x[feature] <= threshold` routes to the left child.

use serde::{Deserialize, Serialize};

use super::{ClassifyError, Dataset, Model, ModelKind, ModelParams, N_FEATURES};

/// Tree growth limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    /// Maximum number of split levels above a leaf.
    pub max_depth: usize,
    /// Nodes with fewer rows than this become leaves.
    pub min_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { max_depth: 6, min_split: 4 }
    }
}

/// Array-indexed tree node; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { class: usize },
}

/// Gini impurity of a node with the given per-class counts:
/// `1 - sum((count/total)^2)`; an empty node has impurity 0.
pub fn gini_impurity(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n) * (c as f64 / n)).sum::<f64>()
}

struct Builder<'a> {
    x: &'a [[f64; N_FEATURES]],
    y: &'a [usize],
    n_classes: usize,
    cfg: TreeConfig,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &i in idx {
            counts[self.y[i]] += 1;
        }
        counts
    }

    /// Majority class; ties go to the lowest class index, which is the
    /// lexicographically first label.
    fn majority(&self, idx: &[usize]) -> usize {
        let counts = self.counts(idx);
        let mut best = 0;
        for (c, &n) in counts.iter().enumerate().skip(1) {
            if n > counts[best] {
                best = c;
            }
        }
        best
    }

    /// Best (feature, threshold) by weighted child Gini; `None` when every
    /// feature is constant on this node.
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64)> {
        let mut best: Option<(f64, usize, f64)> = None;
        let n = idx.len() as f64;
        for feature in 0..N_FEATURES {
            let mut vals: Vec<f64> = idx.iter().map(|&i| self.x[i][feature]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for pair in vals.windows(2) {
                let threshold = 0.5 * (pair[0] + pair[1]);
                let mut left = vec![0usize; self.n_classes];
                let mut right = vec![0usize; self.n_classes];
                for &i in idx {
                    if self.x[i][feature] <= threshold {
                        left[self.y[i]] += 1;
                    } else {
                        right[self.y[i]] += 1;
                    }
                }
                let nl: usize = left.iter().sum();
                let nr: usize = right.iter().sum();
                let weighted = (nl as f64 * gini_impurity(&left)
                    + nr as f64 * gini_impurity(&right))
                    / n;
                // Strict improvement only: earlier (feature, threshold)
                // pairs win ties because we scan both in ascending order.
                if best.map_or(true, |(bw, _, _)| weighted < bw) {
                    best = Some((weighted, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.cfg.max_depth || idx.len() < self.cfg.min_split {
            self.nodes.push(TreeNode::Leaf { class: self.majority(idx) });
            return self.nodes.len() - 1;
        }
        let Some((feature, threshold)) = self.best_split(idx) else {
            self.nodes.push(TreeNode::Leaf { class: self.majority(idx) });
            return self.nodes.len() - 1;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let here = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { class: 0 }); // placeholder
        let left = self.build(&left_idx, depth + 1);
        let right = self.build(&right_idx, depth + 1);
        self.nodes[here] = TreeNode::Split { feature, threshold, left, right };
        here
    }
}

/// Fit a CART tree on the standardized dataset.
pub fn train_tree(ds: &Dataset, cfg: &TreeConfig) -> Result<Model, ClassifyError> {
    let (x, y, labels) = ds.design()?;
    let mut builder =
        Builder { x: &x, y: &y, n_classes: labels.len(), cfg: *cfg, nodes: Vec::new() };
    let idx: Vec<usize> = (0..x.len()).collect();
    let root = builder.build(&idx, 0);
    debug_assert_eq!(root, 0, "root is always the first node");
    Ok(Model {
        kind: ModelKind::Tree,
        scaler: ds.scaler.clone(),
        labels,
        params: ModelParams::Tree { nodes: builder.nodes },
    })
}

/// Walk a fitted tree; returns the leaf's class index.
pub(crate) fn tree_class(
    nodes: &[TreeNode],
    z: &[f64; N_FEATURES],
) -> Result<usize, ClassifyError> {
    let mut at = 0usize;
    for _ in 0..=nodes.len() {
        match nodes.get(at) {
            Some(TreeNode::Leaf { class }) => return Ok(*class),
            Some(TreeNode::Split { feature, threshold, left, right }) => {
                at = if z[*feature] <= *threshold { *left } else { *right };
            }
            None => break,
        }
    }
    Err(ClassifyError::MalformedModel("tree walk escaped the node table".into()))
}
