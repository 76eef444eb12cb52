//! Content scorer: logistic regression over hashed n-grams of textualized
//! changes, trained with seeded SGD. It fills the role of a fine-tuned
//! language model classifier with the same interface (text in, probability
//! out) at a size that trains on a laptop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureHasher, NGramOrders, SparseVector};
use super::ClassifierError;
use crate::graph2text::{TextualizedChange, TEMPLATE_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContentScorerConfig {
    /// log2 of the hashed feature space.
    pub feature_space_bits: u32,
    pub n_gram_orders: NGramOrders,
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 penalty on weights (not the bias).
    pub l2: f64,
    /// Share of samples held out for epoch selection.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for ContentScorerConfig {
    fn default() -> Self {
        Self {
            feature_space_bits: 20,
            n_gram_orders: NGramOrders::default(),
            epochs: 5,
            learning_rate: 0.2,
            l2: 1e-6,
            validation_fraction: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub train_loss: Vec<f64>,
    /// Empty when the sample was too small to hold anything out.
    pub validation_loss: Vec<f64>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentScorerModel {
    hasher: FeatureHasher,
    weights: Vec<f64>,
    bias: f64,
    training_config: ContentScorerConfig,
    template_version: String,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn logloss_from_logit(z: f64, y: bool) -> f64 {
    if y {
        softplus(-z)
    } else {
        softplus(z)
    }
}

/// Mean logistic loss plus `l2 / 2 * |w|^2`.
pub fn objective(weights: &[f64], bias: f64, data: &[(SparseVector, bool)], l2: f64) -> f64 {
    let loss: f64 = data
        .iter()
        .map(|(x, y)| logloss_from_logit(x.dot(weights) + bias, *y))
        .sum::<f64>()
        / data.len() as f64;
    loss + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of [`objective`] with respect to weights and bias.
pub fn gradient(weights: &[f64], bias: f64, data: &[(SparseVector, bool)], l2: f64) -> (Vec<f64>, f64) {
    let n = data.len() as f64;
    let mut grad: Vec<f64> = weights.iter().map(|w| l2 * w).collect();
    let mut grad_bias = 0.0;
    for (x, y) in data {
        let residual = sigmoid(x.dot(weights) + bias) - f64::from(u8::from(*y));
        for &(i, v) in &x.entries {
            grad[i as usize] += residual * v / n;
        }
        grad_bias += residual / n;
    }
    (grad, grad_bias)
}

fn mean_loss(weights: &[f64], bias: f64, data: &[&(SparseVector, bool)]) -> f64 {
    data.iter()
        .map(|(x, y)| logloss_from_logit(x.dot(weights) + bias, *y))
        .sum::<f64>()
        / data.len() as f64
}

/// Weights stored as `scale * v` so the L2 shrink costs O(1) per step.
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
}

impl ScaledWeights {
    fn dot(&self, x: &SparseVector) -> f64 {
        self.scale * x.dot(&self.v)
    }

    fn step(&mut self, x: &SparseVector, lr: f64, residual: f64, l2: f64) {
        self.scale *= 1.0 - lr * l2;
        if self.scale < 1e-9 {
            self.materialize_in_place();
        }
        let k = lr * residual / self.scale;
        for &(i, val) in &x.entries {
            self.v[i as usize] -= k * val;
        }
    }

    fn materialize_in_place(&mut self) {
        let s = self.scale;
        self.v.iter_mut().for_each(|w| *w *= s);
        self.scale = 1.0;
    }

    fn materialize(&self) -> Vec<f64> {
        self.v.iter().map(|w| w * self.scale).collect()
    }
}

pub fn train_content_scorer(
    samples: &[(TextualizedChange, bool)],
    config: &ContentScorerConfig,
) -> Result<(ContentScorerModel, TrainingReport), ClassifierError> {
    if samples.len() < 2 {
        return Err(ClassifierError::EmptyInput);
    }
    let positives = samples.iter().filter(|s| s.1).count();
    if positives == 0 || positives == samples.len() {
        return Err(ClassifierError::SingleClass);
    }
    if !(0.0..1.0).contains(&config.validation_fraction) || config.epochs == 0 || config.feature_space_bits > 30 {
        return Err(ClassifierError::InvalidConfig(
            "need epochs >= 1, validation_fraction in [0, 1) and feature_space_bits <= 30".into(),
        ));
    }
    let hasher = FeatureHasher::new(1usize << config.feature_space_bits, config.n_gram_orders.clone());
    let data: Vec<(SparseVector, bool)> = samples
        .iter()
        .map(|(c, y)| (hasher.featurize(&c.prefix, &c.body), *y))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (config.validation_fraction * data.len() as f64).floor() as usize;
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    let val: Vec<&(SparseVector, bool)> = val_idx.iter().map(|&i| &data[i]).collect();

    let mut w = ScaledWeights {
        v: vec![0.0; hasher.space()],
        scale: 1.0,
    };
    let mut bias = 0.0;
    let mut report = TrainingReport {
        train_loss: Vec::new(),
        validation_loss: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(f64, Vec<f64>, f64)> = None;

    for epoch in 1..=config.epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &train_idx {
            let (x, y) = &data[i];
            let z = w.dot(x) + bias;
            epoch_loss += logloss_from_logit(z, *y);
            let residual = sigmoid(z) - f64::from(u8::from(*y));
            w.step(x, config.learning_rate, residual, config.l2);
            bias -= config.learning_rate * residual;
        }
        epoch_loss /= train_idx.len() as f64;
        report.train_loss.push(epoch_loss);
        let dense = w.materialize();
        let select_loss = if val.is_empty() {
            // Nothing held out: keep the last epoch.
            -(epoch as f64)
        } else {
            let l = mean_loss(&dense, bias, &val);
            report.validation_loss.push(l);
            l
        };
        tracing::info!(epoch, train_loss = epoch_loss, validation_loss = ?report.validation_loss.last(), "content scorer epoch");
        if best.as_ref().is_none_or(|b| select_loss < b.0) {
            best = Some((select_loss, dense, bias));
            report.best_epoch = epoch;
        }
    }
    let (_, weights, bias) = best.expect("at least one epoch");
    Ok((
        ContentScorerModel {
            hasher,
            weights,
            bias,
            training_config: config.clone(),
            template_version: TEMPLATE_VERSION.to_owned(),
        },
        report,
    ))
}

impl ContentScorerModel {
    /// A model from explicit parameters; `weights.len()` must be a power of two.
    pub fn from_parts(
        weights: Vec<f64>,
        bias: f64,
        n_gram_orders: NGramOrders,
        training_config: ContentScorerConfig,
    ) -> Result<Self, ClassifierError> {
        if !weights.len().is_power_of_two() {
            return Err(ClassifierError::InvalidConfig("feature space must be a power of two".into()));
        }
        Ok(Self {
            hasher: FeatureHasher::new(weights.len(), n_gram_orders),
            weights,
            bias,
            training_config,
            template_version: TEMPLATE_VERSION.to_owned(),
        })
    }

    pub fn feature_space(&self) -> usize {
        self.hasher.space()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn training_config(&self) -> &ContentScorerConfig {
        &self.training_config
    }

    pub fn template_version(&self) -> &str {
        &self.template_version
    }

    pub fn featurize(&self, prefix: &str, body: &str) -> SparseVector {
        self.hasher.featurize(prefix, body)
    }

    pub fn score_text(&self, prefix: &str, body: &str) -> f64 {
        sigmoid(self.featurize(prefix, body).dot(&self.weights) + self.bias)
    }

    pub fn score_change(&self, change: &TextualizedChange) -> f64 {
        self.score_text(&change.prefix, &change.body)
    }
}

/// Mean of per-change scores; `None` when the revision had no scorable change.
pub fn pool_scores(scores: &[f64]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    // Rounding can push the mean a hair outside the range of its inputs.
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    Some(mean.clamp(lo, hi))
}

#[derive(Serialize, Deserialize)]
struct ContentWire {
    template_version: String,
    feature_space: usize,
    n_gram_orders: NGramOrders,
    bias: f64,
    /// Non-zero weights only, as (index, value).
    weights: Vec<(u32, f64)>,
    training_config: ContentScorerConfig,
}

impl Serialize for ContentScorerModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ContentWire {
            template_version: self.template_version.clone(),
            feature_space: self.feature_space(),
            n_gram_orders: self.training_config.n_gram_orders.clone(),
            bias: self.bias,
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i as u32, *w))
                .collect(),
            training_config: self.training_config.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ContentScorerModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = ContentWire::deserialize(d)?;
        if !wire.feature_space.is_power_of_two() || wire.feature_space > 1 << 30 {
            return Err(D::Error::custom("feature_space must be a power of two up to 2^30"));
        }
        let mut weights = vec![0.0; wire.feature_space];
        for (i, w) in wire.weights {
            let slot = weights
                .get_mut(i as usize)
                .ok_or_else(|| D::Error::custom(format!("weight index {i} out of range")))?;
            *slot = w;
        }
        Ok(Self {
            hasher: FeatureHasher::new(wire.feature_space, wire.n_gram_orders),
            weights,
            bias: wire.bias,
            training_config: wire.training_config,
            template_version: wire.template_version,
        })
    }
}
