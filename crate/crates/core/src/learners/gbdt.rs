//! Multi-class gradient boosted regression trees on the softmax
//! cross-entropy.
//!
//! Every round fits one depth-limited tree per class to the current
//! gradient and hessian (second-order leaf values), using exact greedy
//! splits over presorted feature values. Trees are grown level by level,
//! so each level costs one pass over every presorted column.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logistic::softmax;
use super::{check_training_data, class_counts, K};
use crate::ingest::FactualityLabel;
use crate::{Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// L2 penalty on leaf values.
    pub l2: f64,
    pub min_split_gain: f64,
    /// Stop when the validation loss has not improved for this many
    /// rounds. Needs validation data; off by default.
    pub early_stopping_rounds: Option<usize>,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            l2: 1.0,
            min_split_gain: 1e-12,
            early_stopping_rounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub init_scores: [f64; K],
    /// `rounds[r][k]` is the tree for class `k` in round `r`.
    pub rounds: Vec<[TreeNode; K]>,
    /// Mean training cross-entropy before boosting and after each round.
    pub loss_history: Vec<f64>,
}

impl GbdtModel {
    pub fn scores(&self, row: &[f64]) -> [f64; K] {
        let mut z = self.init_scores;
        for trees in &self.rounds {
            for (zk, t) in z.iter_mut().zip(trees) {
                *zk += t.predict(row);
            }
        }
        z
    }

    pub fn predict(&self, row: &[f64]) -> [f64; K] {
        softmax(self.scores(row))
    }
}

/// Column-wise ascending row order, built once per training run.
struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    fn new(x: &Matrix) -> Self {
        let order = (0..x.n_cols())
            .into_par_iter()
            .map(|j| {
                let mut idx: Vec<u32> = (0..x.n_rows() as u32).collect();
                idx.sort_by(|&a, &b| x.get(a as usize, j).total_cmp(&x.get(b as usize, j)).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { order }
    }
}

#[derive(Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
    n: usize,
}

impl Stats {
    fn add(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.n += 1;
    }

    fn score(&self, l2: f64) -> f64 {
        self.g * self.g / (self.h + l2)
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

enum BuildNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Grows one regression tree. Returns the tree and each row's leaf value.
fn grow_tree(x: &Matrix, sorted: &Presorted, grad: &[f64], hess: &[f64], cfg: &GbdtConfig) -> (TreeNode, Vec<f64>) {
    let n = x.n_rows();
    const NONE: u32 = u32::MAX;
    // Index of the open node each row belongs to; NONE once its node is final.
    let mut node_of = vec![0u32; n];
    let mut nodes: Vec<Option<BuildNode>> = vec![None];
    let mut totals = vec![Stats::default()];
    for i in 0..n {
        totals[0].add(grad[i], hess[i]);
    }
    let mut open: Vec<usize> = vec![0];
    // leaf value per node id once final
    let leaf_value = |s: &Stats| -s.g / (s.h + cfg.l2) * cfg.learning_rate;

    for _depth in 0..cfg.max_depth {
        if open.is_empty() {
            break;
        }
        // slot of each open node in `open`
        let mut slot = vec![usize::MAX; nodes.len()];
        for (s, &id) in open.iter().enumerate() {
            slot[id] = s;
        }
        let parent: Vec<Stats> = open.iter().map(|&id| totals[id]).collect();
        let per_feature: Vec<Vec<Option<Candidate>>> = (0..x.n_cols())
            .into_par_iter()
            .map(|j| {
                let mut left = vec![Stats::default(); open.len()];
                let mut last = vec![f64::NAN; open.len()];
                let mut best: Vec<Option<Candidate>> = vec![None; open.len()];
                for &r in &sorted.order[j] {
                    let r = r as usize;
                    let id = node_of[r];
                    if id == NONE {
                        continue;
                    }
                    let s = slot[id as usize];
                    let v = x.get(r, j);
                    let l = left[s];
                    if l.n > 0 && v > last[s] {
                        let p = parent[s];
                        let right = Stats {
                            g: p.g - l.g,
                            h: p.h - l.h,
                            n: p.n - l.n,
                        };
                        if l.n >= cfg.min_samples_leaf && right.n >= cfg.min_samples_leaf {
                            let gain = 0.5 * (l.score(cfg.l2) + right.score(cfg.l2) - p.score(cfg.l2));
                            if gain > cfg.min_split_gain && best[s].is_none_or(|b| gain > b.gain) {
                                best[s] = Some(Candidate {
                                    gain,
                                    feature: j,
                                    threshold: last[s] + (v - last[s]) / 2.0,
                                });
                            }
                        }
                    }
                    left[s].add(grad[r], hess[r]);
                    last[s] = v;
                }
                best
            })
            .collect();

        let mut next_open = Vec::new();
        for (s, &id) in open.iter().enumerate() {
            // Features are visited in index order, so ties keep the lowest index.
            let mut best: Option<Candidate> = None;
            for cands in &per_feature {
                if let Some(c) = cands[s] {
                    if best.is_none_or(|b| c.gain > b.gain) {
                        best = Some(c);
                    }
                }
            }
            match best {
                Some(c) => {
                    let left = nodes.len();
                    nodes.push(None);
                    nodes.push(None);
                    totals.push(Stats::default());
                    totals.push(Stats::default());
                    nodes[id] = Some(BuildNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right: left + 1,
                    });
                    next_open.push(left);
                    next_open.push(left + 1);
                }
                None => nodes[id] = Some(BuildNode::Leaf(leaf_value(&totals[id]))),
            }
        }
        // route rows of split nodes to their children
        for r in 0..n {
            let id = node_of[r];
            if id == NONE {
                continue;
            }
            match &nodes[id as usize] {
                Some(BuildNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                }) => {
                    let child = if x.get(r, *feature) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                    node_of[r] = child as u32;
                    totals[child].add(grad[r], hess[r]);
                }
                _ => node_of[r] = NONE,
            }
        }
        open = next_open;
    }
    for &id in &open {
        nodes[id] = Some(BuildNode::Leaf(leaf_value(&totals[id])));
    }

    fn to_tree(nodes: &[Option<BuildNode>], id: usize) -> TreeNode {
        match nodes[id].as_ref().expect("every node is finalised") {
            BuildNode::Leaf(v) => TreeNode::Leaf { value: *v },
            BuildNode::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeNode::Split {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(to_tree(nodes, *left)),
                right: Box::new(to_tree(nodes, *right)),
            },
        }
    }
    let tree = to_tree(&nodes, 0);
    let per_row = x.rows().map(|row| tree.predict(row)).collect();
    (tree, per_row)
}

fn scale_tree(t: &mut TreeNode, factor: f64) {
    match t {
        TreeNode::Leaf { value } => *value *= factor,
        TreeNode::Split { left, right, .. } => {
            scale_tree(left, factor);
            scale_tree(right, factor);
        }
    }
}

fn mean_cross_entropy(scores: &[[f64; K]], y: &[FactualityLabel]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(y)
        .map(|(z, l)| {
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - z[l.ordinal()]
        })
        .sum();
    total / y.len() as f64
}

pub fn gbdt_train(x: &Matrix, y: &[FactualityLabel], config: &GbdtConfig) -> Result<GbdtModel> {
    gbdt_train_with_validation(x, y, None, config)
}

/// Like [`gbdt_train`], optionally tracking a validation set for early
/// stopping. The returned model keeps the rounds up to the best validation
/// loss.
pub fn gbdt_train_with_validation(
    x: &Matrix,
    y: &[FactualityLabel],
    validation: Option<(&Matrix, &[FactualityLabel])>,
    config: &GbdtConfig,
) -> Result<GbdtModel> {
    check_training_data(x, y)?;
    let n = x.n_rows();
    let counts = class_counts(y);
    let init_scores = counts.map(|c| (c as f64 / n as f64).max(1e-12).ln());
    let sorted = Presorted::new(x);

    let mut scores = vec![init_scores; n];
    let mut loss = mean_cross_entropy(&scores, y);
    let mut loss_history = vec![loss];
    let mut rounds: Vec<[TreeNode; K]> = Vec::with_capacity(config.n_rounds);

    let mut val_scores = validation.map(|(vx, _)| vec![init_scores; vx.n_rows()]);
    let mut best_val = (f64::INFINITY, 0usize);

    let onehot: Vec<[f64; K]> = y
        .iter()
        .map(|l| {
            let mut t = [0.0; K];
            t[l.ordinal()] = 1.0;
            t
        })
        .collect();
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];

    for round in 0..config.n_rounds {
        let probs: Vec<[f64; K]> = scores.iter().map(|z| softmax(*z)).collect();
        let mut trees = Vec::with_capacity(K);
        let mut deltas = Vec::with_capacity(K);
        for k in 0..K {
            for i in 0..n {
                let p = probs[i][k];
                grad[i] = p - onehot[i][k];
                hess[i] = (p * (1.0 - p)).max(1e-16);
            }
            let (tree, delta) = grow_tree(x, &sorted, &grad, &hess, config);
            trees.push(tree);
            deltas.push(delta);
        }

        // Halve the round until the training loss does not increase.
        let mut factor = 1.0;
        let mut candidate = Vec::new();
        let mut new_loss = f64::INFINITY;
        for _ in 0..30 {
            candidate = scores
                .iter()
                .enumerate()
                .map(|(i, z)| {
                    let mut z = *z;
                    for k in 0..K {
                        z[k] += factor * deltas[k][i];
                    }
                    z
                })
                .collect();
            new_loss = mean_cross_entropy(&candidate, y);
            if new_loss <= loss {
                break;
            }
            factor *= 0.5;
        }
        if new_loss > loss {
            log::debug!("boosting round {round} could not reduce the loss; stopping");
            break;
        }
        if factor != 1.0 {
            trees.iter_mut().for_each(|t| scale_tree(t, factor));
        }
        scores = candidate;
        loss = new_loss;
        loss_history.push(loss);
        let trees: [TreeNode; K] = trees.try_into().unwrap_or_else(|_| unreachable!("one tree per class"));

        if let (Some((vx, vy)), Some(vs)) = (validation, val_scores.as_mut()) {
            for (i, z) in vs.iter_mut().enumerate() {
                for (zk, t) in z.iter_mut().zip(&trees) {
                    *zk += t.predict(vx.row(i));
                }
            }
            let vl = mean_cross_entropy(vs, vy);
            rounds.push(trees);
            if vl < best_val.0 {
                best_val = (vl, rounds.len());
            } else if let Some(patience) = config.early_stopping_rounds {
                if rounds.len() - best_val.1 >= patience {
                    rounds.truncate(best_val.1);
                    loss_history.truncate(best_val.1 + 1);
                    break;
                }
            }
        } else {
            rounds.push(trees);
        }
    }
    Ok(GbdtModel {
        init_scores,
        rounds,
        loss_history,
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use FactualityLabel::*;

    fn blobs(seed: u64) -> (Matrix, Vec<FactualityLabel>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (label, c) in [(Low, [0.0, 0.0]), (Mixed, [6.0, 0.0]), (High, [0.0, 6.0])] {
            for _ in 0..20 {
                rows.push([c[0] + rng.random_range(-1.0..1.0), c[1] + rng.random_range(-1.0..1.0)]);
                y.push(label);
            }
        }
        (Matrix::from_rows(&rows, 2).unwrap(), y)
    }

    fn argmax(p: [f64; K]) -> usize {
        (0..K).max_by(|&a, &b| p[a].total_cmp(&p[b]).then(b.cmp(&a))).unwrap()
    }

    #[test]
    fn separable_blobs() {
        let (x, y) = blobs(1);
        let m = gbdt_train(&x, &y, &GbdtConfig::default()).unwrap();
        let correct = x
            .rows()
            .zip(&y)
            .filter(|(r, l)| argmax(m.predict(r)) == l.ordinal())
            .count();
        assert_eq!(correct, 60);
        assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(m.rounds.iter().flatten().all(|t| t.depth() <= 3));
    }

    #[test]
    fn constant_features_predict_prior() {
        let x = Matrix::from_rows(&[[1.0, 2.0]; 10], 2).unwrap();
        let y = [Low, Mixed, Mixed, High, High, High, High, High, Mixed, High];
        let m = gbdt_train(&x, &y, &GbdtConfig::default()).unwrap();
        let p = m.predict(&[1.0, 2.0]);
        for (pk, prior) in p.iter().zip([0.1, 0.3, 0.6]) {
            assert!((pk - prior).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn min_leaf_respected() {
        let (x, y) = blobs(2);
        let cfg = GbdtConfig {
            min_samples_leaf: 25,
            n_rounds: 5,
            ..Default::default()
        };
        let m = gbdt_train(&x, &y, &cfg).unwrap();
        // 60 rows with >= 25 per leaf allows at most one split per tree
        assert!(m.rounds.iter().flatten().all(|t| t.depth() <= 1));
    }

    #[test]
    fn early_stopping_truncates() {
        let (x, y) = blobs(3);
        let (vx, vy) = blobs(4);
        let cfg = GbdtConfig {
            early_stopping_rounds: Some(3),
            n_rounds: 400,
            ..Default::default()
        };
        let m = gbdt_train_with_validation(&x, &y, Some((&vx, &vy)), &cfg).unwrap();
        assert!(m.rounds.len() <= 400);
        assert_eq!(m.loss_history.len(), m.rounds.len() + 1);
    }
}
