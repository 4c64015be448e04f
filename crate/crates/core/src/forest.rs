//! CART-style regression trees and bagged forests.
//!
//! Trees split greedily on variance reduction. Forests bootstrap rows per
//! tree and average predictions. Fitting distinct trees is parallel with
//! per-tree derived seeds, so results do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{rng_from_seed, Prng};
use crate::seed_of;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSubsample {
    /// Consider every feature at every split.
    All,
    /// Consider a random sqrt(d) subset per split.
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf_size: usize,
    pub feature_subsample: FeatureSubsample,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf_size: 5,
            feature_subsample: FeatureSubsample::Sqrt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            tree: TreeParams::default(),
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    params: TreeParams,
    nodes: Vec<Node>,
}

/// Best split found for a node: (feature, threshold, sse_reduction, partition point).
struct SplitChoice {
    feature: usize,
    threshold: f64,
    reduction: f64,
}

impl<'a> TreeBuilder<'a> {
    fn build(&mut self, indices: &mut [usize], depth: usize, rng: &mut Prng) -> usize {
        let mean = indices.iter().map(|&i| self.y[i]).sum::<f64>() / indices.len() as f64;
        let at_depth_limit = self.params.max_depth.is_some_and(|d| depth >= d);
        if indices.len() < 2 * self.params.min_leaf_size || at_depth_limit {
            return self.push_leaf(mean);
        }
        let sse: f64 = indices
            .iter()
            .map(|&i| (self.y[i] - mean) * (self.y[i] - mean))
            .sum();
        if sse <= 1e-24 {
            return self.push_leaf(mean);
        }
        let Some(choice) = self.best_split(indices, rng) else {
            return self.push_leaf(mean);
        };
        if choice.reduction <= 0.0 {
            return self.push_leaf(mean);
        }

        let mid = partition_in_place(indices, |i| {
            self.x.get(i, choice.feature) < choice.threshold
        });
        // A valid split always leaves both children at least min_leaf_size.
        debug_assert!(mid >= self.params.min_leaf_size);
        debug_assert!(indices.len() - mid >= self.params.min_leaf_size);

        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean }); // placeholder
        let (left_idx, right_idx) = {
            let (l, r) = indices.split_at_mut(mid);
            let li = self.build(l, depth + 1, rng);
            let ri = self.build(r, depth + 1, rng);
            (li, ri)
        };
        self.nodes[slot] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left: left_idx,
            right: right_idx,
        };
        slot
    }

    fn push_leaf(&mut self, value: f64) -> usize {
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    fn candidate_features(&self, rng: &mut Prng) -> Vec<usize> {
        let d = self.x.cols();
        match self.params.feature_subsample {
            FeatureSubsample::All => (0..d).collect(),
            FeatureSubsample::Sqrt => {
                let k = ((d as f64).sqrt().ceil() as usize).clamp(1, d);
                crate::seed::sample_without_replacement(d, k, rng)
            }
        }
    }

    fn best_split(&self, indices: &[usize], rng: &mut Prng) -> Option<SplitChoice> {
        let min_leaf = self.params.min_leaf_size;
        let n = indices.len();
        let mut best: Option<SplitChoice> = None;

        let mut order: Vec<usize> = indices.to_vec();
        for feature in self.candidate_features(rng) {
            order.sort_by(|&a, &b| {
                self.x
                    .get(a, feature)
                    .partial_cmp(&self.x.get(b, feature))
                    .unwrap()
            });
            // Prefix sums over the sorted order let each split position be
            // scored in O(1): reduction = S_l^2/n_l + S_r^2/n_r - S^2/n.
            let total: f64 = order.iter().map(|&i| self.y[i]).sum();
            let mut left_sum = 0.0;
            let base = total * total / n as f64;
            for pos in 1..n {
                left_sum += self.y[order[pos - 1]];
                if pos < min_leaf || n - pos < min_leaf {
                    continue;
                }
                let prev = self.x.get(order[pos - 1], feature);
                let next = self.x.get(order[pos], feature);
                if prev == next {
                    continue;
                }
                let right_sum = total - left_sum;
                let reduction = left_sum * left_sum / pos as f64
                    + right_sum * right_sum / (n - pos) as f64
                    - base;
                if best.as_ref().is_none_or(|b| reduction > b.reduction) {
                    best = Some(SplitChoice {
                        feature,
                        threshold: 0.5 * (prev + next),
                        reduction,
                    });
                }
            }
        }
        best
    }
}

fn partition_in_place<F: Fn(usize) -> bool>(indices: &mut [usize], left_of: F) -> usize {
    let mut mid = 0;
    for i in 0..indices.len() {
        if left_of(indices[i]) {
            indices.swap(i, mid);
            mid += 1;
        }
    }
    mid
}

/// Fits one CART regression tree by greedy variance-reduction splits.
pub fn fit_tree(x: &Matrix, y: &[f64], params: &TreeParams, rng: &mut Prng) -> Result<RegressionTree> {
    if x.rows() == 0 {
        return Err(Error::EmptyInput("tree training data"));
    }
    if x.rows() != y.len() {
        return Err(Error::dim(x.rows(), y.len(), "tree targets"));
    }
    if params.min_leaf_size == 0 {
        return Err(Error::config("min_leaf_size must be >= 1"));
    }
    if x.rows() < params.min_leaf_size {
        return Err(Error::config(format!(
            "need at least min_leaf_size={} rows, got {}",
            params.min_leaf_size,
            x.rows()
        )));
    }
    let mut builder = TreeBuilder {
        x,
        y,
        params: *params,
        nodes: Vec::new(),
    };
    let mut indices: Vec<usize> = (0..x.rows()).collect();
    builder.build(&mut indices, 0, rng);
    Ok(RegressionTree {
        nodes: builder.nodes,
    })
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        // The root is whichever node was finalized first for the full index
        // set; with the placeholder scheme that is node 0.
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<RegressionTree>,
    input_dim: usize,
}

/// Fits a bagged forest. Tree `t` draws its bootstrap sample and split
/// features from a seed derived as (seed, "tree", t), so the result is
/// deterministic however the trees are scheduled.
pub fn fit_forest(x: &Matrix, y: &[f64], params: &ForestParams, seed: u64) -> Result<Forest> {
    if params.n_trees == 0 {
        return Err(Error::config("n_trees must be >= 1"));
    }
    if x.rows() == 0 {
        return Err(Error::EmptyInput("forest training data"));
    }
    let trees: Result<Vec<RegressionTree>> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(seed_of!(seed, "tree", t));
            if params.bootstrap {
                let n = x.rows();
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let xb = x.select_rows(&idx);
                let yb: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                fit_tree(&xb, &yb, &params.tree, &mut rng)
            } else {
                fit_tree(x, y, &params.tree, &mut rng)
            }
        })
        .collect();
    Ok(Forest {
        trees: trees?,
        input_dim: x.cols(),
    })
}

impl Forest {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.input_dim {
            return Err(Error::dim(self.input_dim, x.cols(), "forest input width"));
        }
        let mut out = vec![0.0; x.rows()];
        for tree in &self.trees {
            for (o, r) in out.iter_mut().zip(x.iter_rows()) {
                *o += tree.predict_row(r);
            }
        }
        let k = self.trees.len() as f64;
        for o in &mut out {
            *o /= k;
        }
        Ok(out)
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}
