//! Gradient-boosted depth-limited regression trees on the multiclass
//! log-loss, with impurity-decrease feature importances.
//!
//! Desk defaults are deliberately small (10 stages, depth 2, rate 0.1);
//! `GbtConfig::paper_scale` mirrors the common library default of
//! 100 stages at depth 3 for runs that accept the extra time.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub n_stages: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

impl GbtConfig {
    pub fn desk_scale() -> Self {
        GbtConfig {
            n_stages: 10,
            max_depth: 2,
            learning_rate: 0.1,
        }
    }

    pub fn paper_scale() -> Self {
        GbtConfig {
            n_stages: 100,
            max_depth: 3,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    /// `trees[stage][class]`.
    trees: Vec<Vec<RegressionTree>>,
    n_classes: usize,
    n_features: usize,
    learning_rate: f64,
    /// Normalized impurity-decrease importances; all zero when no split
    /// was ever made.
    pub importances: Vec<f64>,
    pub degenerate: bool,
}

impl TreeEnsembleModel {
    fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.n_classes];
        for stage in &self.trees {
            for (k, tree) in stage.iter().enumerate() {
                f[k] += self.learning_rate * tree.predict(x);
            }
        }
        f
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let f = self.scores(x);
        let mut best = 0;
        for k in 1..self.n_classes {
            if f[k] > f[best] {
                best = k;
            }
        }
        best
    }

    pub fn accuracy(&self, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        let hits = xs
            .iter()
            .zip(ys)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        hits as f64 / xs.len().max(1) as f64
    }
}

struct TreeBuilder<'a> {
    xs: &'a [Vec<f64>],
    residuals: &'a [f64],
    max_depth: usize,
    n_classes: usize,
    nodes: Vec<TreeNode>,
    importance_acc: &'a mut [f64],
}

impl TreeBuilder<'_> {
    /// Greedy best-split scan. Ties go to the lowest feature index and
    /// smallest threshold, keeping fits deterministic.
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let n = idx.len();
        if n < 2 {
            return None;
        }
        let total: f64 = idx.iter().map(|&i| self.residuals[i]).sum();
        let total_sq: f64 = idx.iter().map(|&i| self.residuals[i].powi(2)).sum();
        let parent_sse = total_sq - total * total / n as f64;
        if parent_sse <= 1e-12 {
            return None;
        }
        let n_features = self.xs[0].len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted = idx.to_vec();
        for f in 0..n_features {
            sorted.sort_by(|&a, &b| {
                self.xs[a][f]
                    .partial_cmp(&self.xs[b][f])
                    .expect("finite features")
            });
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for pos in 0..n - 1 {
                let r = self.residuals[sorted[pos]];
                left_sum += r;
                left_sq += r * r;
                let (xv, xn) = (self.xs[sorted[pos]][f], self.xs[sorted[pos + 1]][f]);
                if xv == xn {
                    continue;
                }
                let nl = (pos + 1) as f64;
                let nr = (n - pos - 1) as f64;
                let right_sum = total - left_sum;
                let right_sq = total_sq - left_sq;
                let sse = (left_sq - left_sum * left_sum / nl)
                    + (right_sq - right_sum * right_sum / nr);
                let gain = parent_sse - sse;
                if gain > 1e-12 && best.map_or(true, |(_, _, g)| gain > g) {
                    best = Some((f, 0.5 * (xv + xn), gain));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let split = if depth < self.max_depth {
            self.best_split(&idx)
        } else {
            None
        };
        match split {
            None => {
                let value = self.leaf_value(&idx);
                self.nodes.push(TreeNode::Leaf { value });
                self.nodes.len() - 1
            }
            Some((feature, threshold, gain)) => {
                self.importance_acc[feature] += gain;
                let (li, ri): (Vec<usize>, Vec<usize>) = idx
                    .into_iter()
                    .partition(|&i| self.xs[i][feature] <= threshold);
                let slot = self.nodes.len();
                self.nodes.push(TreeNode::Leaf { value: 0.0 });
                let left = self.grow(li, depth + 1);
                let right = self.grow(ri, depth + 1);
                self.nodes[slot] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                slot
            }
        }
    }

    /// Newton leaf value for the multiclass log-loss.
    fn leaf_value(&self, idx: &[usize]) -> f64 {
        let num: f64 = idx.iter().map(|&i| self.residuals[i]).sum();
        let den: f64 = idx
            .iter()
            .map(|&i| {
                let r = self.residuals[i].abs();
                r * (1.0 - r)
            })
            .sum();
        let k = self.n_classes as f64;
        if den < 1e-10 {
            0.0
        } else {
            (k - 1.0) / k * num / den
        }
    }
}

/// Fit a boosted ensemble; one regression tree per class per stage on the
/// softmax pseudo-residuals.
pub fn fit_tree_ensemble(xs: &[Vec<f64>], ys: &[usize], config: GbtConfig) -> TreeEnsembleModel {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least 2 samples");
    let n_features = xs[0].len();
    let mut seen: Vec<usize> = ys.to_vec();
    seen.sort_unstable();
    seen.dedup();
    let n_classes = ys.iter().max().unwrap() + 1;
    if seen.len() < 2 {
        return TreeEnsembleModel {
            trees: Vec::new(),
            n_classes,
            n_features,
            learning_rate: config.learning_rate,
            importances: vec![0.0; n_features],
            degenerate: true,
        };
    }
    let n = xs.len();
    let mut f = vec![0.0; n * n_classes];
    let mut importance_acc = vec![0.0; n_features];
    let mut trees = Vec::with_capacity(config.n_stages);
    let all_idx: Vec<usize> = (0..n).collect();
    let mut residuals = vec![0.0; n];
    for _ in 0..config.n_stages {
        let mut stage = Vec::with_capacity(n_classes);
        // Softmax probabilities at the current scores.
        let mut probs = vec![0.0; n * n_classes];
        for i in 0..n {
            let row = &f[i * n_classes..(i + 1) * n_classes];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|&v| (v - mx).exp()).sum();
            for k in 0..n_classes {
                probs[i * n_classes + k] = (row[k] - mx).exp() / z;
            }
        }
        for k in 0..n_classes {
            for i in 0..n {
                let target = f64::from(u8::from(ys[i] == k));
                residuals[i] = target - probs[i * n_classes + k];
            }
            let mut builder = TreeBuilder {
                xs,
                residuals: &residuals,
                max_depth: config.max_depth,
                n_classes,
                nodes: Vec::new(),
                importance_acc: &mut importance_acc,
            };
            builder.grow(all_idx.clone(), 0);
            let tree = RegressionTree {
                nodes: builder.nodes,
            };
            for (i, x) in xs.iter().enumerate() {
                f[i * n_classes + k] += config.learning_rate * tree.predict(x);
            }
            stage.push(tree);
        }
        trees.push(stage);
    }
    let total: f64 = importance_acc.iter().sum();
    let importances = if total > 0.0 {
        importance_acc.iter().map(|&v| v / total).collect()
    } else {
        importance_acc
    };
    TreeEnsembleModel {
        trees,
        n_classes,
        n_features,
        learning_rate: config.learning_rate,
        importances,
        degenerate: false,
    }
}
