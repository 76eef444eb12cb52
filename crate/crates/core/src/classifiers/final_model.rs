use serde::{Deserialize, Serialize};

use super::gbdt::{train_gbdt, Dataset, GbdtConfig, GbdtModel};
use super::metadata::{MetadataFeatures, METADATA_FEATURE_NAMES};
use super::ClassifierError;

/// Pooled score fed to the final model when a revision had no scorable change.
pub const MISSING_SCORE_IMPUTATION: f64 = 0.5;

pub const N_METADATA_FEATURES: usize = METADATA_FEATURE_NAMES.len();
pub const N_FEATURES: usize = N_METADATA_FEATURES + 3;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    METADATA_FEATURE_NAMES[0],
    METADATA_FEATURE_NAMES[1],
    METADATA_FEATURE_NAMES[2],
    METADATA_FEATURE_NAMES[3],
    METADATA_FEATURE_NAMES[4],
    METADATA_FEATURE_NAMES[5],
    METADATA_FEATURE_NAMES[6],
    METADATA_FEATURE_NAMES[7],
    METADATA_FEATURE_NAMES[8],
    METADATA_FEATURE_NAMES[9],
    METADATA_FEATURE_NAMES[10],
    METADATA_FEATURE_NAMES[11],
    "pooled_content_score",
    "content_score_count",
    "content_score_missing",
];

/// Per-revision summary of the content scorer's output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentSummary {
    pub pooled: Option<f64>,
    pub count: usize,
}

impl ContentSummary {
    pub fn from_scores(scores: &[f64]) -> Self {
        Self {
            pooled: super::content::pool_scores(scores),
            count: scores.len(),
        }
    }

    pub fn to_vector(&self) -> [f64; 3] {
        [
            self.pooled.unwrap_or(MISSING_SCORE_IMPUTATION),
            self.count as f64,
            if self.pooled.is_none() { 1.0 } else { 0.0 },
        ]
    }
}

/// Which feature groups the final model may see. The two single-group sets
/// reproduce the metadata-only and content-only baselines through masking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Full,
    MetadataOnly,
    ContentOnly,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Full, FeatureSet::MetadataOnly, FeatureSet::ContentOnly];

    pub fn uses_column(self, column: usize) -> bool {
        match self {
            FeatureSet::Full => true,
            FeatureSet::MetadataOnly => column < N_METADATA_FEATURES,
            FeatureSet::ContentOnly => column >= N_METADATA_FEATURES,
        }
    }

    /// Zeroes masked columns. A zeroed column is constant and never split on.
    pub fn apply(self, row: &mut [f64]) {
        for (i, v) in row.iter_mut().enumerate() {
            if !self.uses_column(i) {
                *v = 0.0;
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Full => "full",
            FeatureSet::MetadataOnly => "metadata_only",
            FeatureSet::ContentOnly => "content_only",
        }
    }
}

pub fn feature_vector(metadata: &MetadataFeatures, content: &ContentSummary) -> Vec<f64> {
    let mut row = Vec::with_capacity(N_FEATURES);
    row.extend_from_slice(&metadata.to_vector());
    row.extend_from_slice(&content.to_vector());
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRow {
    pub metadata: MetadataFeatures,
    pub content: ContentSummary,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinalClassifierConfig {
    pub gbdt: GbdtConfig,
    pub feature_set: FeatureSet,
}

impl Default for FinalClassifierConfig {
    fn default() -> Self {
        Self {
            gbdt: GbdtConfig::default(),
            feature_set: FeatureSet::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalClassifierModel {
    pub gbdt: GbdtModel,
    pub feature_set: FeatureSet,
    /// Weight of each positive row relative to a negative one.
    pub positive_class_weight: f64,
}

/// Positive-class weight that evens out the class totals: negatives / positives.
pub fn positive_class_weight(labels: &[bool]) -> Result<f64, ClassifierError> {
    let pos = labels.iter().filter(|y| **y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(ClassifierError::SingleClass);
    }
    Ok(neg as f64 / pos as f64)
}

fn matrix(rows: &[FinalRow], set: FeatureSet) -> (Vec<Vec<f64>>, Vec<bool>) {
    rows.iter()
        .map(|r| {
            let mut v = feature_vector(&r.metadata, &r.content);
            set.apply(&mut v);
            (v, r.label)
        })
        .unzip()
}

pub fn train_final_classifier(
    rows: &[FinalRow],
    validation: &[FinalRow],
    config: &FinalClassifierConfig,
) -> Result<FinalClassifierModel, ClassifierError> {
    if rows.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    if validation.is_empty() {
        return Err(ClassifierError::EmptyValidation);
    }
    let (x, y) = matrix(rows, config.feature_set);
    let (vx, vy) = matrix(validation, config.feature_set);
    let pw = positive_class_weight(&y)?;
    let weight = |labels: &[bool]| -> Vec<f64> { labels.iter().map(|&l| if l { pw } else { 1.0 }).collect() };
    let (w, vw) = (weight(&y), weight(&vy));
    let gbdt = train_gbdt(
        Dataset { x: &x, y: &y, w: &w },
        Dataset { x: &vx, y: &vy, w: &vw },
        &config.gbdt,
    )?;
    Ok(FinalClassifierModel {
        gbdt,
        feature_set: config.feature_set,
        positive_class_weight: pw,
    })
}

impl FinalClassifierModel {
    pub fn predict_vector(&self, row: &[f64]) -> f64 {
        let mut row = row.to_vec();
        self.feature_set.apply(&mut row);
        self.gbdt.predict_proba(&row)
    }

    pub fn predict(&self, metadata: &MetadataFeatures, content: &ContentSummary) -> f64 {
        self.predict_vector(&feature_vector(metadata, content))
    }
}
