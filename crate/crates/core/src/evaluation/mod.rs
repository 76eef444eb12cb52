//! Ranking metrics, bootstrap intervals, filter rate and group fairness.

mod bootstrap;
mod fairness;
mod metrics;
mod report;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::corpus::{read_jsonl, CorpusError, NewcomerPolicy, RevisionRecord};

pub use bootstrap::{bootstrap_aucs, bootstrap_ci, BootstrapConfig, PresortedScores};
pub use fairness::{delta_auc, disparate_impact_ratio, FairnessGroupSpec, DEFAULT_DIR_THRESHOLD};
pub use metrics::{auc, auc_of, filter_rate_at_recall, precision_recall_table, PrPoint};
pub use report::{sliced_report, EvaluationReport, ReportConfig, SliceAuc, DAUC_CONVENTION};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
    #[error("both classes must be present")]
    SingleClass,
    #[error("no positive rows")]
    NoPositives,
    #[error("recall must lie in (0, 1], got {0}")]
    InvalidRecall(f64),
    #[error("group {group:?} of slice {slice:?} is empty")]
    EmptyGroup { slice: String, group: String },
    #[error("privileged group of slice {slice:?} is never flagged")]
    ZeroPrivilegedRate { slice: String },
    #[error("group {group:?} of slice {slice:?} lacks one of the classes")]
    SingleClassInGroup { slice: String, group: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

fn label_from_number_or_bool<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    use serde::de::Error;
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::Bool(b) => Ok(b),
        serde_json::Value::Number(n) if n.as_f64() == Some(1.0) => Ok(true),
        serde_json::Value::Number(n) if n.as_f64() == Some(0.0) => Ok(false),
        other => Err(D::Error::custom(format!("label must be 0, 1 or a boolean, got {other}"))),
    }
}

fn label_as_number<S: serde::Serializer>(label: &bool, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*label))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRow {
    pub score: f64,
    #[serde(deserialize_with = "label_from_number_or_bool", serialize_with = "label_as_number")]
    pub label: bool,
    #[serde(default)]
    pub groups: BTreeMap<String, String>,
}

impl ScoredRow {
    pub fn new(score: f64, label: bool) -> Self {
        Self {
            score,
            label,
            groups: BTreeMap::new(),
        }
    }
}

/// Non-empty scored rows with finite scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredDataset {
    rows: Vec<ScoredRow>,
}

impl ScoredDataset {
    pub fn new(rows: Vec<ScoredRow>) -> Result<Self, EvaluationError> {
        if rows.is_empty() {
            return Err(EvaluationError::EmptyDataset);
        }
        if let Some(r) = rows.iter().find(|r| !r.score.is_finite()) {
            return Err(EvaluationError::NonFiniteScore(r.score));
        }
        Ok(Self { rows })
    }

    pub fn from_scores(scores: &[f64], labels: &[bool]) -> Result<Self, EvaluationError> {
        Self::new(scores.iter().zip(labels).map(|(&s, &l)| ScoredRow::new(s, l)).collect())
    }

    /// Reads the scored JSON-Lines format, gzip or plain.
    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self, EvaluationError> {
        Self::new(read_jsonl(path)?)
    }

    pub fn rows(&self) -> &[ScoredRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.score).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.label).count()
    }

    /// Rows whose `slice` group equals `group`, or `None` if there are none.
    pub fn subset(&self, slice: &str, group: &str) -> Option<ScoredDataset> {
        let rows: Vec<ScoredRow> = self
            .rows
            .iter()
            .filter(|r| r.groups.get(slice).is_some_and(|g| g == group))
            .cloned()
            .collect();
        (!rows.is_empty()).then_some(ScoredDataset { rows })
    }

    /// Distinct values of `slice`, sorted.
    pub fn group_values(&self, slice: &str) -> Vec<String> {
        let mut values: Vec<String> = self.rows.iter().filter_map(|r| r.groups.get(slice).cloned()).collect();
        values.sort();
        values.dedup();
        values
    }

    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Result<Self, EvaluationError> {
        Self::new(
            self.rows
                .iter()
                .map(|r| ScoredRow {
                    score: f(r.score),
                    ..r.clone()
                })
                .collect(),
        )
    }
}

impl<'de> Deserialize<'de> for ScoredDataset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            rows: Vec<ScoredRow>,
        }
        let w = Wire::deserialize(d)?;
        ScoredDataset::new(w.rows).map_err(serde::de::Error::custom)
    }
}

/// Flags every anonymous edit as vandalism: score 1 for anonymous, 0 otherwise.
pub fn rule_based_baseline(records: &[RevisionRecord], policy: &NewcomerPolicy) -> Result<ScoredDataset, EvaluationError> {
    ScoredDataset::new(
        records
            .iter()
            .map(|r| ScoredRow {
                score: if r.editor.is_anonymous { 1.0 } else { 0.0 },
                label: r.reverted,
                groups: r.slice_groups(policy),
            })
            .collect(),
    )
}
