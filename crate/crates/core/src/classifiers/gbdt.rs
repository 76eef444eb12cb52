//! Gradient-boosted shallow regression trees on weighted logistic loss.
//!
//! Features are pre-binned into at most `max_bins` buckets per column using
//! training-set quantiles. Trees are grown level by level with Newton leaf
//! values `-G / (H + lambda)`. Split search visits features and thresholds in
//! ascending order and only replaces the incumbent on a strictly larger gain,
//! so ties resolve to the lowest feature index, then the lowest threshold.
//! A column with a single distinct training value has no thresholds and is
//! never split on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::content::sigmoid;
use super::ClassifierError;

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub n_iterations: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 regularization on leaf values.
    pub l2_leaf_reg: f64,
    pub max_bins: usize,
    /// Minimum hessian sum on each side of a split.
    pub min_child_hessian: f64,
    /// Row sampling rate per iteration; 1.0 uses every row.
    pub subsample: f64,
    /// Stop once validation loss has not improved for this many iterations.
    pub early_stopping_rounds: Option<usize>,
    pub seed: u64,
}

impl GbdtConfig {
    /// Reference settings: 2500 iterations at learning rate 0.005.
    pub fn reference() -> Self {
        Self {
            n_iterations: 2500,
            learning_rate: 0.005,
            ..Self::desk()
        }
    }

    /// Smaller default for desk-scale runs.
    pub fn desk() -> Self {
        Self {
            n_iterations: 500,
            learning_rate: 0.05,
            max_depth: 3,
            l2_leaf_reg: 3.0,
            max_bins: 255,
            min_child_hessian: 1e-3,
            subsample: 1.0,
            early_stopping_rounds: None,
            seed: 0,
        }
    }
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self::desk()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn max_abs_leaf(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { value } => Some(value.abs()),
                _ => None,
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub n_features: usize,
    pub base_score: f64,
    pub learning_rate: f64,
    /// Trees up to and including the best validation iteration.
    pub trees: Vec<Tree>,
    pub n_iterations: usize,
    /// 1-based iteration with the lowest validation loss; equals `trees.len()`.
    pub best_iteration: usize,
    /// Validation loss after each iteration that was run.
    pub validation_loss: Vec<f64>,
}

impl GbdtModel {
    /// Raw log-odds using the first `k` trees.
    pub fn predict_raw_at(&self, row: &[f64], k: usize) -> f64 {
        self.base_score
            + self.learning_rate * self.trees.iter().take(k).map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn predict_raw(&self, row: &[f64]) -> f64 {
        self.predict_raw_at(row, self.trees.len())
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.predict_raw(row))
    }
}

/// Per-column split thresholds and the bin index of every training row.
struct Binned {
    thresholds: Vec<Vec<f64>>,
    bins: Vec<Vec<u16>>,
}

fn column_thresholds(values: &mut [f64], max_bins: usize) -> Vec<f64> {
    values.sort_unstable_by(f64::total_cmp);
    let mut uniq: Vec<f64> = Vec::new();
    for &v in values.iter() {
        if uniq.last() != Some(&v) {
            uniq.push(v);
        }
    }
    if uniq.len() <= 1 {
        return Vec::new();
    }
    if uniq.len() <= max_bins {
        return uniq.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect();
    }
    let n = values.len();
    let mut cuts: Vec<f64> = (1..max_bins).map(|q| values[q * n / max_bins]).collect();
    cuts.dedup();
    if cuts.last() == uniq.last() {
        cuts.pop();
    }
    cuts
}

fn bin_data(x: &[Vec<f64>], n_features: usize, max_bins: usize) -> Binned {
    let mut thresholds = Vec::with_capacity(n_features);
    let mut bins = Vec::with_capacity(n_features);
    for f in 0..n_features {
        let mut col: Vec<f64> = x.iter().map(|r| r[f]).collect();
        let t = column_thresholds(&mut col.clone(), max_bins);
        for v in col.iter_mut() {
            *v = t.partition_point(|&c| c < *v) as f64;
        }
        bins.push(col.iter().map(|&b| b as u16).collect());
        thresholds.push(t);
    }
    Binned { thresholds, bins }
}

struct SplitChoice {
    feature: usize,
    bin: usize,
    gain: f64,
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

fn grow_tree(
    binned: &Binned,
    rows: Vec<usize>,
    grad: &[f64],
    hess: &[f64],
    config: &GbdtConfig,
) -> Tree {
    let mut nodes = Vec::new();
    // (node index, rows, depth)
    let mut frontier = vec![(0usize, rows, 0usize)];
    nodes.push(Node::Leaf { value: 0.0 });
    let lambda = config.l2_leaf_reg;
    while let Some((id, rows, depth)) = frontier.pop() {
        let g: f64 = rows.iter().map(|&i| grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| hess[i]).sum();
        let leaf = Node::Leaf { value: -g / (h + lambda) };
        if depth >= config.max_depth || rows.len() < 2 {
            nodes[id] = leaf;
            continue;
        }
        let parent_score = score(g, h, lambda);
        let mut best: Option<SplitChoice> = None;
        for (f, thresholds) in binned.thresholds.iter().enumerate() {
            if thresholds.is_empty() {
                continue;
            }
            let n_bins = thresholds.len() + 1;
            let mut hg = vec![0.0; n_bins];
            let mut hh = vec![0.0; n_bins];
            let col = &binned.bins[f];
            for &i in &rows {
                let b = col[i] as usize;
                hg[b] += grad[i];
                hh[b] += hess[i];
            }
            let (mut gl, mut hl) = (0.0, 0.0);
            for b in 0..thresholds.len() {
                gl += hg[b];
                hl += hh[b];
                let (gr, hr) = (g - gl, h - hl);
                if hl < config.min_child_hessian || hr < config.min_child_hessian {
                    continue;
                }
                let gain = score(gl, hl, lambda) + score(gr, hr, lambda) - parent_score;
                if gain > MIN_GAIN && best.as_ref().is_none_or(|s| gain > s.gain) {
                    best = Some(SplitChoice { feature: f, bin: b, gain });
                }
            }
        }
        let Some(split) = best else {
            nodes[id] = leaf;
            continue;
        };
        let col = &binned.bins[split.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| col[i] as usize <= split.bin);
        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        let right = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[id] = Node::Split {
            feature: split.feature,
            threshold: binned.thresholds[split.feature][split.bin],
            left,
            right,
        };
        frontier.push((right, right_rows, depth + 1));
        frontier.push((left, left_rows, depth + 1));
    }
    Tree { nodes }
}

fn weighted_logloss(raw: &[f64], y: &[bool], w: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut wsum = 0.0;
    for ((&z, &yi), &wi) in raw.iter().zip(y).zip(w) {
        let p = sigmoid(z).clamp(1e-15, 1.0 - 1e-15);
        total -= wi * if yi { p.ln() } else { (1.0 - p).ln() };
        wsum += wi;
    }
    total / wsum
}

/// Training or validation data: row-major features, labels and sample weights.
#[derive(Debug, Clone, Copy)]
pub struct Dataset<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [bool],
    pub w: &'a [f64],
}

impl Dataset<'_> {
    fn check(&self, n_features: usize) -> Result<(), ClassifierError> {
        if self.x.len() != self.y.len() || self.x.len() != self.w.len() {
            return Err(ClassifierError::InvalidConfig("x, y and w lengths differ".into()));
        }
        if self.x.iter().any(|r| r.len() != n_features || r.iter().any(|v| !v.is_finite())) {
            return Err(ClassifierError::InvalidConfig(format!(
                "every row needs {n_features} finite features"
            )));
        }
        if self.w.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(ClassifierError::InvalidConfig("weights must be positive".into()));
        }
        Ok(())
    }
}

pub fn train_gbdt(train: Dataset<'_>, valid: Dataset<'_>, config: &GbdtConfig) -> Result<GbdtModel, ClassifierError> {
    if train.x.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    if valid.x.is_empty() {
        return Err(ClassifierError::EmptyValidation);
    }
    let n_features = train.x[0].len();
    train.check(n_features)?;
    valid.check(n_features)?;
    let wpos: f64 = train.y.iter().zip(train.w).filter(|(y, _)| **y).map(|(_, w)| w).sum();
    let wneg: f64 = train.y.iter().zip(train.w).filter(|(y, _)| !**y).map(|(_, w)| w).sum();
    if wpos == 0.0 || wneg == 0.0 {
        return Err(ClassifierError::SingleClass);
    }
    if config.n_iterations == 0 || !(config.learning_rate > 0.0) || config.max_bins < 2 || config.max_bins > 1 << 16 {
        return Err(ClassifierError::InvalidConfig(
            "need n_iterations >= 1, learning_rate > 0 and 2 <= max_bins <= 65536".into(),
        ));
    }

    let binned = bin_data(train.x, n_features, config.max_bins);
    let base_score = (wpos / wneg).ln();
    let n = train.x.len();
    let mut raw = vec![base_score; n];
    let mut val_raw = vec![base_score; valid.x.len()];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trees = Vec::with_capacity(config.n_iterations);
    let mut validation_loss = Vec::with_capacity(config.n_iterations);
    let mut best = (f64::INFINITY, 0usize);

    for iter in 1..=config.n_iterations {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            let y = if train.y[i] { 1.0 } else { 0.0 };
            grad[i] = train.w[i] * (p - y);
            hess[i] = train.w[i] * (p * (1.0 - p)).max(1e-16);
        }
        let rows: Vec<usize> = if config.subsample < 1.0 {
            (0..n).filter(|_| rng.random_bool(config.subsample.max(0.0))).collect()
        } else {
            (0..n).collect()
        };
        let tree = grow_tree(&binned, rows, &grad, &hess, config);
        for (r, row) in raw.iter_mut().zip(train.x) {
            *r += config.learning_rate * tree.predict(row);
        }
        for (r, row) in val_raw.iter_mut().zip(valid.x) {
            *r += config.learning_rate * tree.predict(row);
        }
        trees.push(tree);
        let loss = weighted_logloss(&val_raw, valid.y, valid.w);
        validation_loss.push(loss);
        if loss < best.0 {
            best = (loss, iter);
        }
        if config.early_stopping_rounds.is_some_and(|r| iter - best.1 >= r) {
            break;
        }
    }
    trees.truncate(best.1);
    tracing::info!(best_iteration = best.1, validation_loss = best.0, "boosting finished");
    Ok(GbdtModel {
        n_features,
        base_score,
        learning_rate: config.learning_rate,
        trees,
        n_iterations: config.n_iterations,
        best_iteration: best.1,
        validation_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    #[test]
    fn thresholds() {
        assert!(column_thresholds(&mut [3.0, 3.0, 3.0], 8).is_empty());
        assert_eq!(column_thresholds(&mut [1.0, 3.0, 2.0, 3.0], 8), vec![1.5, 2.5]);
        let mut many: Vec<f64> = (0..1000).map(f64::from).collect();
        let t = column_thresholds(&mut many, 10);
        assert_eq!(t.len(), 9);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn perfectly_informative_feature() {
        let x: Vec<Vec<f64>> = (0..200).map(|i| vec![(i % 2) as f64, (i % 7) as f64]).collect();
        let y: Vec<bool> = (0..200).map(|i| i % 2 == 1).collect();
        let w = ones(200);
        let data = Dataset { x: &x, y: &y, w: &w };
        let config = GbdtConfig {
            n_iterations: 50,
            learning_rate: 0.3,
            ..Default::default()
        };
        let model = train_gbdt(data, data, &config).unwrap();
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(model.predict_proba(row) > 0.5, label);
        }
        assert!(model.best_iteration <= model.n_iterations);
        assert_eq!(model.trees.len(), model.best_iteration);
    }

    #[test]
    fn constant_column_never_splits() {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![0.0, (i % 10) as f64]).collect();
        let y: Vec<bool> = (0..100).map(|i| i % 10 >= 5).collect();
        let w = ones(100);
        let data = Dataset { x: &x, y: &y, w: &w };
        let model = train_gbdt(data, data, &GbdtConfig { n_iterations: 20, ..Default::default() }).unwrap();
        for tree in &model.trees {
            for node in &tree.nodes {
                if let Node::Split { feature, .. } = node {
                    assert_eq!(*feature, 1);
                }
            }
        }
    }

    #[test]
    fn step_size_bound() {
        let x: Vec<Vec<f64>> = (0..300).map(|i| vec![(i % 13) as f64, (i % 5) as f64]).collect();
        let y: Vec<bool> = (0..300).map(|i| (i % 13) + (i % 5) > 8).collect();
        let w = ones(300);
        let data = Dataset { x: &x, y: &y, w: &w };
        let model = train_gbdt(data, data, &GbdtConfig { n_iterations: 40, ..Default::default() }).unwrap();
        for row in &x {
            for k in 0..model.trees.len() {
                let step = (model.predict_raw_at(row, k + 1) - model.predict_raw_at(row, k)).abs();
                assert!(step <= model.learning_rate * model.trees[k].max_abs_leaf() + 1e-12);
            }
        }
    }

    #[test]
    fn errors() {
        let x = vec![vec![1.0], vec![2.0]];
        let y = vec![true, true];
        let w = ones(2);
        let d = Dataset { x: &x, y: &y, w: &w };
        assert!(matches!(train_gbdt(d, d, &GbdtConfig::default()), Err(ClassifierError::SingleClass)));
        let empty = Dataset { x: &[], y: &[], w: &[] };
        assert!(matches!(train_gbdt(d, empty, &GbdtConfig::default()), Err(ClassifierError::EmptyValidation)));
    }
}
