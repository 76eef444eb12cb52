use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci, BootstrapConfig};
use super::fairness::{delta_auc, disparate_impact_ratio, FairnessGroupSpec};
use super::metrics::{auc, filter_rate_at_recall};
use super::{EvaluationError, ScoredDataset};

pub const DAUC_CONVENTION: &str = "auc(privileged) - auc(unprivileged)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub recall_levels: Vec<f64>,
    pub bootstrap: BootstrapConfig,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            recall_levels: vec![0.99, 0.9, 0.7],
            bootstrap: BootstrapConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceAuc {
    pub slice: String,
    pub group: String,
    pub n_rows: usize,
    pub n_positives: usize,
    /// Absent when the group holds a single class.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_rows: usize,
    pub n_positives: usize,
    pub auc: f64,
    pub auc_ci_low: f64,
    pub auc_ci_high: f64,
    pub bootstrap: BootstrapConfig,
    /// Keyed by recall level, e.g. "0.99".
    pub fr: BTreeMap<String, f64>,
    /// Keyed by slice name.
    pub dir: BTreeMap<String, f64>,
    pub dir_threshold: BTreeMap<String, f64>,
    pub dauc: BTreeMap<String, f64>,
    pub dauc_convention: String,
    pub per_slice_auc: Vec<SliceAuc>,
}

/// Global AUC with bootstrap interval, filter rates, fairness metrics for
/// every spec and per-group AUC for every named slice.
pub fn sliced_report(
    data: &ScoredDataset,
    specs: &[FairnessGroupSpec],
    slice_names: &[&str],
    config: &ReportConfig,
) -> Result<EvaluationReport, EvaluationError> {
    let global = auc(data)?;
    let (low, high) = bootstrap_ci(data, &config.bootstrap)?;
    let mut fr = BTreeMap::new();
    for &r in &config.recall_levels {
        fr.insert(format!("{r}"), filter_rate_at_recall(data, r)?);
    }
    let mut dir = BTreeMap::new();
    let mut dir_threshold = BTreeMap::new();
    let mut dauc = BTreeMap::new();
    for spec in specs {
        dir.insert(spec.slice.clone(), disparate_impact_ratio(data, spec)?);
        dir_threshold.insert(spec.slice.clone(), spec.threshold);
        dauc.insert(spec.slice.clone(), delta_auc(data, spec)?);
    }
    let mut per_slice_auc = Vec::new();
    for &slice in slice_names {
        for group in data.group_values(slice) {
            let subset = data.subset(slice, &group).expect("group value comes from the data");
            per_slice_auc.push(SliceAuc {
                slice: slice.to_owned(),
                n_rows: subset.len(),
                n_positives: subset.positives(),
                auc: auc(&subset).ok(),
                group,
            });
        }
    }
    Ok(EvaluationReport {
        n_rows: data.len(),
        n_positives: data.positives(),
        auc: global,
        auc_ci_low: low,
        auc_ci_high: high,
        bootstrap: config.bootstrap.clone(),
        fr,
        dir,
        dir_threshold,
        dauc,
        dauc_convention: DAUC_CONVENTION.to_owned(),
        per_slice_auc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::ScoredRow;

    fn quick() -> ReportConfig {
        ReportConfig {
            bootstrap: BootstrapConfig {
                n_resamples: 100,
                resample_size: 100,
                seed: 3,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn data() -> ScoredDataset {
        let rows = (0..200)
            .map(|i| {
                let anon = i % 4 == 0;
                let label = i % 5 == 0 || (anon && i % 3 == 0);
                let score = ((i * 7919) % 97) as f64 / 97.0 * 0.6 + if label { 0.35 } else { 0.0 };
                ScoredRow {
                    score,
                    label,
                    groups: [
                        ("editor".to_owned(), if anon { "anonymous" } else { "registered" }.to_owned()),
                        ("all".to_owned(), "all".to_owned()),
                    ]
                    .into(),
                }
            })
            .collect();
        ScoredDataset::new(rows).unwrap()
    }

    #[test]
    fn single_slice_equals_global() {
        let d = data();
        let r = sliced_report(&d, &[], &["all"], &quick()).unwrap();
        assert_eq!(r.per_slice_auc.len(), 1);
        assert_eq!(r.per_slice_auc[0].auc, Some(r.auc));
    }

    #[test]
    fn disjoint_slices_match_subsets() {
        let d = data();
        let r = sliced_report(&d, &[FairnessGroupSpec::anonymous()], &["editor"], &quick()).unwrap();
        for s in &r.per_slice_auc {
            let sub = d.subset("editor", &s.group).unwrap();
            assert_eq!(s.auc, Some(auc(&sub).unwrap()));
        }
        assert!(r.dir.contains_key("editor") && r.dauc.contains_key("editor"));
        assert!(r.fr.values().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn report_round_trips() {
        let r = sliced_report(&data(), &[FairnessGroupSpec::anonymous()], &["editor", "all"], &quick()).unwrap();
        let json = serde_json::to_string_pretty(&r).unwrap();
        let back: EvaluationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
