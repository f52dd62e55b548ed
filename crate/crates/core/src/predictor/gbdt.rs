//! Gradient-boosted regression trees with exact splits.
//!
//! Trees are grown level by level: every feature is scanned once per level
//! in presorted order, accumulating gradient sums for all open nodes at once.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 4,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            lambda: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    SquaredError,
    /// Binary log-loss on targets in {0, 1}; raw scores are log-odds.
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub objective: Objective,
    pub n_features: usize,
    pub base: f64,
    /// Leaf values already include the learning rate.
    pub trees: Vec<Tree>,
}

impl Ensemble {
    /// Raw score: the regression value or the log-odds.
    pub fn raw(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_features);
        let mut s = self.base;
        for t in &self.trees {
            s += t.predict(x);
        }
        s
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw(x))
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy)]
struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Fits an ensemble on row-major `x`. Weights must be non-negative with a
/// positive sum.
pub fn fit(x: &[Vec<f64>], y: &[f64], w: &[f64], objective: Objective, cfg: &GbdtConfig) -> Ensemble {
    let n = x.len();
    assert!(n > 0 && y.len() == n && w.len() == n);
    let n_features = x[0].len();
    let w_sum: f64 = w.iter().sum();
    assert!(w_sum > 0.0, "sample weights sum to zero");
    let mean = w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / w_sum;
    let base = match objective {
        Objective::SquaredError => mean,
        Objective::Logistic => {
            let p = mean.clamp(1e-6, 1.0 - 1e-6);
            (p / (1.0 - p)).ln()
        }
    };

    let columns: Vec<Vec<f64>> = (0..n_features).map(|f| x.iter().map(|r| r[f]).collect()).collect();
    let sorted: Vec<Vec<usize>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            idx
        })
        .collect();

    let mut pred = vec![base; n];
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    for _ in 0..cfg.n_trees {
        for i in 0..n {
            match objective {
                Objective::SquaredError => {
                    g[i] = w[i] * (pred[i] - y[i]);
                    h[i] = w[i];
                }
                Objective::Logistic => {
                    let p = sigmoid(pred[i]);
                    g[i] = w[i] * (p - y[i]);
                    h[i] = w[i] * (p * (1.0 - p)).max(1e-12);
                }
            }
        }
        let tree = grow(&columns, &sorted, &g, &h, cfg);
        for (i, p) in pred.iter_mut().enumerate() {
            *p += tree.predict(&x[i]);
        }
        trees.push(tree);
    }
    Ensemble {
        objective,
        n_features,
        base,
        trees,
    }
}

fn grow(columns: &[Vec<f64>], sorted: &[Vec<usize>], g: &[f64], h: &[f64], cfg: &GbdtConfig) -> Tree {
    let n = g.len();
    let lambda = cfg.lambda;
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);
    let leaf = |gs: f64, hs: f64| -gs / (hs + lambda) * cfg.learning_rate;

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut node_of = vec![0usize; n];
    let mut open: Vec<usize> = vec![0];

    for depth in 0..=cfg.max_depth {
        let mut slot = vec![usize::MAX; nodes.len()];
        for (s, &node) in open.iter().enumerate() {
            slot[node] = s;
        }
        let k = open.len();
        let (mut gt, mut ht, mut ct) = (vec![0.0; k], vec![0.0; k], vec![0usize; k]);
        for i in 0..n {
            let s = slot[node_of[i]];
            if s != usize::MAX {
                gt[s] += g[i];
                ht[s] += h[i];
                ct[s] += 1;
            }
        }

        let mut best: Vec<Option<BestSplit>> = vec![None; k];
        if depth < cfg.max_depth {
            let (mut gl, mut hl, mut cl, mut last) = (vec![0.0; k], vec![0.0; k], vec![0usize; k], vec![0.0; k]);
            for (f, order) in sorted.iter().enumerate() {
                let col = &columns[f];
                gl.iter_mut().for_each(|v| *v = 0.0);
                hl.iter_mut().for_each(|v| *v = 0.0);
                cl.iter_mut().for_each(|v| *v = 0);
                for &i in order {
                    let s = slot[node_of[i]];
                    if s == usize::MAX {
                        continue;
                    }
                    let v = col[i];
                    if cl[s] >= cfg.min_samples_leaf && ct[s] - cl[s] >= cfg.min_samples_leaf && v > last[s] {
                        let gain = score(gl[s], hl[s]) + score(gt[s] - gl[s], ht[s] - hl[s]) - score(gt[s], ht[s]);
                        if gain > 1e-12 && best[s].is_none_or(|b| gain > b.gain) {
                            let mid = last[s] + (v - last[s]) / 2.0;
                            let threshold = if mid < v { mid } else { last[s] };
                            best[s] = Some(BestSplit {
                                gain,
                                feature: f,
                                threshold,
                            });
                        }
                    }
                    gl[s] += g[i];
                    hl[s] += h[i];
                    cl[s] += 1;
                    last[s] = v;
                }
            }
        }

        let mut next_open = Vec::new();
        for (s, &node) in open.iter().enumerate() {
            match best[s] {
                Some(b) => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[node] = Node::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left,
                        right: left + 1,
                    };
                    next_open.push(left);
                    next_open.push(left + 1);
                }
                None => nodes[node] = Node::Leaf { value: leaf(gt[s], ht[s]) },
            }
        }
        if next_open.is_empty() {
            break;
        }
        for i in 0..n {
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = nodes[node_of[i]]
            {
                if slot[node_of[i]] != usize::MAX {
                    node_of[i] = if columns[feature][i] <= threshold { left } else { right };
                }
            }
        }
        open = next_open;
    }
    Tree { nodes }
}
