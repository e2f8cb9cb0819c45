use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_inputs, Classifier, ModelKind, TrainConfig};
use crate::data::ClassWeights;
use crate::rng::{derive_seed, seeded, Rng};
use crate::Result;

pub const N_TREES: usize = 100;
const MIN_SAMPLES_SPLIT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { probability: f64 },
}

/// Node arena; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf_probability(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
                TreeNode::Leaf { probability } => return probability,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
    pub tree_seeds: Vec<u64>,
}

/// A distinct training row inside one tree, weighted by class weight times
/// bootstrap multiplicity.
#[derive(Clone, Copy)]
struct Sample {
    row: usize,
    weight: f64,
    count: f64,
    positive: bool,
}

struct Best {
    feature: usize,
    threshold: f64,
    impurity: f64,
    split_at: usize,
}

struct TreeBuilder<'a> {
    x: &'a Array2<f64>,
    rng: Rng,
    n_candidates: usize,
    nodes: Vec<TreeNode>,
}

/// Weighted Gini impurity of a node, scaled by the node weight:
/// `W * (1 - (P/W)^2 - (N/W)^2) = W - (P^2 + N^2) / W`.
#[inline]
fn scaled_gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let neg = total - pos;
    total - (pos * pos + neg * neg) / total
}

impl TreeBuilder<'_> {
    fn leaf(samples: &[Sample]) -> TreeNode {
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        let pos: f64 = samples.iter().filter(|s| s.positive).map(|s| s.weight).sum();
        TreeNode::Leaf {
            probability: if total > 0.0 { pos / total } else { 0.0 },
        }
    }

    fn best_split_on(&self, feature: usize, samples: &mut [Sample]) -> Option<Best> {
        let x = self.x;
        samples.sort_by(|a, b| x[[a.row, feature]].total_cmp(&x[[b.row, feature]]));
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        let total_pos: f64 = samples.iter().filter(|s| s.positive).map(|s| s.weight).sum();
        let mut left_w = 0.0;
        let mut left_pos = 0.0;
        let mut best: Option<Best> = None;
        for k in 0..samples.len() - 1 {
            let s = samples[k];
            left_w += s.weight;
            if s.positive {
                left_pos += s.weight;
            }
            let lo = x[[s.row, feature]];
            let hi = x[[samples[k + 1].row, feature]];
            if lo >= hi {
                continue;
            }
            let impurity =
                scaled_gini(left_pos, left_w) + scaled_gini(total_pos - left_pos, total - left_w);
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = lo + (hi - lo) / 2.0;
                best = Some(Best {
                    feature,
                    threshold: if mid < hi { mid } else { lo },
                    impurity,
                    split_at: k + 1,
                });
            }
        }
        best
    }

    /// Scans `n_candidates` random features; if none of them can split (all
    /// constant on this node), keeps drawing from the rest.
    fn choose_split(&mut self, samples: &mut [Sample]) -> Option<Best> {
        let mut features: Vec<usize> = (0..self.x.ncols()).collect();
        features.shuffle(&mut self.rng);
        let mut best: Option<Best> = None;
        for (visited, &f) in features.iter().enumerate() {
            if visited >= self.n_candidates && best.is_some() {
                break;
            }
            if let Some(b) = self.best_split_on(f, samples) {
                if best.as_ref().is_none_or(|cur| b.impurity < cur.impurity) {
                    best = Some(b);
                }
            }
        }
        best
    }

    fn build(mut self, root: Vec<Sample>) -> DecisionTree {
        self.nodes.push(TreeNode::Leaf { probability: 0.0 });
        let mut work = vec![(0usize, root)];
        while let Some((slot, mut samples)) = work.pop() {
            let count: f64 = samples.iter().map(|s| s.count).sum();
            let has_pos = samples.iter().any(|s| s.positive);
            let has_neg = samples.iter().any(|s| !s.positive);
            if !(has_pos && has_neg) || count < MIN_SAMPLES_SPLIT {
                self.nodes[slot] = Self::leaf(&samples);
                continue;
            }
            let Some(best) = self.choose_split(&mut samples) else {
                self.nodes[slot] = Self::leaf(&samples);
                continue;
            };
            let x = self.x;
            samples.sort_by(|a, b| {
                x[[a.row, best.feature]].total_cmp(&x[[b.row, best.feature]])
            });
            let right_samples = samples.split_off(best.split_at);
            let left = self.nodes.len();
            let right = left + 1;
            self.nodes.push(TreeNode::Leaf { probability: 0.0 });
            self.nodes.push(TreeNode::Leaf { probability: 0.0 });
            self.nodes[slot] = TreeNode::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right,
            };
            work.push((right, right_samples));
            work.push((left, samples));
        }
        DecisionTree { nodes: self.nodes }
    }
}

fn fit_tree(x: &Array2<f64>, y: &[u8], cw: &ClassWeights, seed: u64) -> DecisionTree {
    let n = y.len();
    let mut rng = seeded(seed);
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    let samples: Vec<Sample> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(row, &c)| Sample {
            row,
            weight: cw.weight_for(y[row]) * f64::from(c),
            count: f64::from(c),
            positive: y[row] == 1,
        })
        .collect();
    let n_candidates = (x.ncols() as f64).sqrt().ceil() as usize;
    TreeBuilder {
        x,
        rng,
        n_candidates: n_candidates.max(1),
        nodes: Vec::new(),
    }
    .build(samples)
}

impl ForestModel {
    /// Grows [`N_TREES`] fully-grown trees on bootstrap resamples, splitting on
    /// class-weighted Gini impurity over `ceil(sqrt(p))` sampled features.
    ///
    /// Tree `t` uses seed `derive_seed(cfg.seed, t)`, so the parallel build
    /// matches a serial one exactly.
    pub fn fit(x: &Array2<f64>, y: &[u8], cw: &ClassWeights, cfg: &TrainConfig) -> Result<Self> {
        check_training_inputs(x, y)?;
        let tree_seeds: Vec<u64> = (0..N_TREES as u64).map(|t| derive_seed(cfg.seed, t)).collect();
        let trees = tree_seeds
            .par_iter()
            .map(|&s| fit_tree(x, y, cw, s))
            .collect();
        Ok(Self {
            n_features: x.ncols(),
            trees,
            tree_seeds,
        })
    }
}

impl Classifier for ForestModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Forest
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf_probability(x)).sum();
        sum / self.trees.len() as f64
    }
}
