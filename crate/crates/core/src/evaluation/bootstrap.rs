use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvaluationError, ScoredDataset};

/// Redraw budget per resample before giving up on finding both classes.
const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub resample_size: usize,
    pub seed: u64,
    /// Percentiles of the resampled AUC distribution, in percent.
    pub low_percentile: f64,
    pub high_percentile: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_resamples: 10_000,
            resample_size: 10_000,
            seed: 0,
            low_percentile: 5.0,
            high_percentile: 95.0,
        }
    }
}

/// Labels in ascending score order, plus where each run of tied scores ends.
/// Built once; each resample then costs O(n + m) instead of a fresh sort.
pub struct PresortedScores {
    order: Vec<usize>,
    labels: Vec<bool>,
    group_ends: Vec<usize>,
}

impl PresortedScores {
    pub fn new(data: &ScoredDataset) -> Self {
        let rows = data.rows();
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_unstable_by(|&a, &b| rows[a].score.total_cmp(&rows[b].score));
        let labels = order.iter().map(|&i| rows[i].label).collect();
        let mut group_ends = Vec::new();
        for k in 1..order.len() {
            if rows[order[k]].score != rows[order[k - 1]].score {
                group_ends.push(k);
            }
        }
        group_ends.push(order.len());
        Self {
            order,
            labels,
            group_ends,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// AUC of the multiset that holds row `order[k]` `counts[k]` times.
    /// `None` if a class is missing.
    pub fn weighted_auc(&self, counts: &[u32]) -> Option<f64> {
        let (mut concordant, mut ties) = (0.0f64, 0.0f64);
        let (mut neg_below, mut pos_total) = (0.0f64, 0.0f64);
        let mut start = 0;
        for &end in &self.group_ends {
            let (mut pos, mut neg) = (0.0f64, 0.0f64);
            for k in start..end {
                let c = f64::from(counts[k]);
                if self.labels[k] {
                    pos += c;
                } else {
                    neg += c;
                }
            }
            concordant += pos * neg_below;
            ties += pos * neg;
            neg_below += neg;
            pos_total += pos;
            start = end;
        }
        (pos_total > 0.0 && neg_below > 0.0).then(|| (concordant + 0.5 * ties) / (pos_total * neg_below))
    }

    /// Multiplicities for one resample in sorted position order.
    fn draw(&self, rng: &mut ChaCha8Rng, size: usize, counts: &mut [u32]) {
        counts.iter_mut().for_each(|c| *c = 0);
        let n = self.len();
        for _ in 0..size {
            counts[rng.random_range(0..n)] += 1;
        }
    }
}

/// AUC of every resample. Resample `i` uses stream `i` of a ChaCha8 generator
/// keyed by the seed, so results do not depend on thread scheduling.
pub fn bootstrap_aucs(data: &ScoredDataset, config: &BootstrapConfig) -> Result<Vec<f64>, EvaluationError> {
    let pos = data.positives();
    if pos == 0 || pos == data.len() || config.resample_size == 0 {
        return Err(EvaluationError::SingleClass);
    }
    let pre = PresortedScores::new(data);
    (0..config.n_resamples)
        .into_par_iter()
        .map_init(
            || vec![0u32; pre.len()],
            |counts, i| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(i as u64);
                for _ in 0..MAX_REDRAWS {
                    pre.draw(&mut rng, config.resample_size, counts);
                    if let Some(a) = pre.weighted_auc(counts) {
                        return Ok(a);
                    }
                }
                Err(EvaluationError::SingleClass)
            },
        )
        .collect()
}

/// Linear interpolation between closest ranks on sorted data.
pub(crate) fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * pct / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile interval of the bootstrap AUC distribution.
pub fn bootstrap_ci(data: &ScoredDataset, config: &BootstrapConfig) -> Result<(f64, f64), EvaluationError> {
    if config.n_resamples == 0 {
        return Err(EvaluationError::EmptyDataset);
    }
    let mut aucs = bootstrap_aucs(data, config)?;
    aucs.sort_unstable_by(f64::total_cmp);
    Ok((
        percentile(&aucs, config.low_percentile),
        percentile(&aucs, config.high_percentile),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::auc;

    fn small_config(seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            n_resamples: 300,
            resample_size: 200,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn unit_counts_reproduce_auc() {
        let scores = [0.1, 0.4, 0.4, 0.35, 0.8, 0.4, 0.9];
        let labels = [false, true, false, false, true, true, false];
        let d = ScoredDataset::from_scores(&scores, &labels).unwrap();
        let pre = PresortedScores::new(&d);
        let got = pre.weighted_auc(&vec![1; scores.len()]).unwrap();
        assert!((got - auc(&d).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn separated_data_collapses_to_one() {
        let scores: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let labels: Vec<bool> = (0..1000).map(|i| i >= 500).collect();
        let d = ScoredDataset::from_scores(&scores, &labels).unwrap();
        assert_eq!(bootstrap_ci(&d, &small_config(1)).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn deterministic_and_ordered() {
        let scores: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let labels: Vec<bool> = (0..500).map(|i| (i * 37) % 101 > 40 && i % 3 != 0).collect();
        let d = ScoredDataset::from_scores(&scores, &labels).unwrap();
        let a = bootstrap_ci(&d, &small_config(9)).unwrap();
        let b = bootstrap_ci(&d, &small_config(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.0 <= a.1);
    }

    #[test]
    fn rare_class_is_redrawn() {
        let mut labels = vec![false; 50];
        labels[3] = true;
        let scores: Vec<f64> = (0..50).map(f64::from).collect();
        let d = ScoredDataset::from_scores(&scores, &labels).unwrap();
        let config = BootstrapConfig {
            n_resamples: 50,
            resample_size: 5,
            seed: 2,
            ..Default::default()
        };
        assert_eq!(bootstrap_aucs(&d, &config).unwrap().len(), 50);
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert!((percentile(&v, 5.0) - 1.2).abs() < 1e-12);
        assert_eq!(percentile(&v, 100.0), 5.0);
    }
}
