//! End-to-end composition: corpus preparation, two-stage training, revision
//! scoring and holdout evaluation of the full model and its baselines.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::content::TrainingReport;
use crate::classifiers::{
    extract_metadata_features, train_content_scorer, train_final_classifier, ClassifierError, ContentScorerConfig,
    ContentScorerModel, ContentSummary, FeatureSet, FinalClassifierConfig, FinalClassifierModel, FinalRow,
    MetadataFeatures, PreviousRevisionIndex,
};
use crate::corpus::{
    apply_quality_filters, balance_lmc_training, balance_negatives, cutoff_last_months, split_by_cutoff, split_dataset, CorpusError,
    DatasetSplit, EditorInfo, FilterReport, NewcomerPolicy, RevisionRecord, DEFAULT_SPLIT_RATIO, DEFAULT_UI_TAG,
};
use crate::diff::{diff_entities, DiffError};
use crate::entity::{EntityDocument, LabelMap};
use crate::evaluation::{rule_based_baseline, EvaluationError, ScoredDataset, ScoredRow};
use crate::graph2text::{Graph2Text, TextualizedChange, TEMPLATE_VERSION};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("no records left after filtering")]
    EmptyCorpus,
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), PipelineError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, value)?;
    w.flush()?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, PipelineError> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// The two trained stages plus the textualization settings they were fit with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub graph2text: Graph2Text,
    pub content: ContentScorerModel,
    pub final_model: FinalClassifierModel,
}

impl ModelBundle {
    pub fn new(graph2text: Graph2Text, content: ContentScorerModel, final_model: FinalClassifierModel) -> Self {
        Self {
            graph2text,
            content,
            final_model,
        }
    }

    /// Rejects a content model fit on another textualization template.
    pub fn check(&self) -> Result<(), PipelineError> {
        let found = self.content.template_version();
        if found != TEMPLATE_VERSION {
            return Err(ClassifierError::TemplateMismatch {
                found: found.to_owned(),
                expected: TEMPLATE_VERSION.to_owned(),
            }
            .into());
        }
        Ok(())
    }

    pub fn load(content_path: impl AsRef<Path>, final_path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let bundle = Self::new(Graph2Text::default(), load_json(content_path)?, load_json(final_path)?);
        bundle.check()?;
        Ok(bundle)
    }

    pub fn save(&self, content_path: impl AsRef<Path>, final_path: impl AsRef<Path>) -> Result<(), PipelineError> {
        save_json(content_path, &self.content)?;
        save_json(final_path, &self.final_model)
    }

    pub fn template_version(&self) -> &str {
        self.content.template_version()
    }
}

/// Metadata for scoring a revision that is not part of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionMetadata {
    #[serde(default)]
    pub revision_id: Option<u64>,
    pub timestamp: DateTime<Utc>,
    pub editor: EditorInfo,
    /// Timestamp of the previous revision on the same entity, if any.
    #[serde(default)]
    pub previous_timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChange {
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub probability: f64,
    pub pooled_content_score: Option<f64>,
    pub changes: Vec<ScoredChange>,
    pub features: MetadataFeatures,
}

fn score_with(
    g2t: &Graph2Text,
    content: &ContentScorerModel,
    final_model: &FinalClassifierModel,
    labels: &LabelMap,
    record: &RevisionRecord,
    previous: Option<DateTime<Utc>>,
) -> ScoreBreakdown {
    let changes = g2t.textualize_revision(&record.deltas, labels, Some(record.entity_id));
    let scores: Vec<f64> = changes.iter().map(|c| content.score_change(c)).collect();
    let summary = ContentSummary::from_scores(&scores);
    let features = extract_metadata_features(record, previous);
    ScoreBreakdown {
        probability: final_model.predict(&features, &summary),
        pooled_content_score: summary.pooled,
        changes: changes
            .into_iter()
            .zip(scores)
            .map(|(c, score)| ScoredChange { text: c.full_text, score })
            .collect(),
        features,
    }
}

/// Revert probability for one record: textualize, score each change, pool,
/// add metadata, apply the final model.
pub fn score_revision(
    content: &ContentScorerModel,
    final_model: &FinalClassifierModel,
    labels: &LabelMap,
    record: &RevisionRecord,
    previous: Option<DateTime<Utc>>,
) -> f64 {
    score_with(&Graph2Text::default(), content, final_model, labels, record, previous).probability
}

/// Loaded models plus the label map. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct RevisionScorer {
    bundle: ModelBundle,
    labels: LabelMap,
}

impl RevisionScorer {
    pub fn new(bundle: ModelBundle, labels: LabelMap) -> Result<Self, PipelineError> {
        bundle.check()?;
        Ok(Self { bundle, labels })
    }

    pub fn bundle(&self) -> &ModelBundle {
        &self.bundle
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    pub fn score_record(&self, record: &RevisionRecord, previous: Option<DateTime<Utc>>) -> ScoreBreakdown {
        self.score_record_with(record, previous, &self.labels)
    }

    /// Scores with `labels` in place of the loaded label map.
    pub fn score_record_with(
        &self,
        record: &RevisionRecord,
        previous: Option<DateTime<Utc>>,
        labels: &LabelMap,
    ) -> ScoreBreakdown {
        score_with(
            &self.bundle.graph2text,
            &self.bundle.content,
            &self.bundle.final_model,
            labels,
            record,
            previous,
        )
    }

    /// Diffs `parent` against `current` and scores the result.
    pub fn score_documents(
        &self,
        parent: Option<&EntityDocument>,
        current: &EntityDocument,
        metadata: &RevisionMetadata,
    ) -> Result<ScoreBreakdown, PipelineError> {
        let record = record_from_documents(parent, current, metadata)?;
        Ok(self.score_record(&record, metadata.previous_timestamp))
    }
}

/// An unlabeled record for the revision turning `parent` into `current`.
pub fn record_from_documents(
    parent: Option<&EntityDocument>,
    current: &EntityDocument,
    metadata: &RevisionMetadata,
) -> Result<RevisionRecord, PipelineError> {
    Ok(RevisionRecord {
        revision_id: metadata.revision_id.unwrap_or(0),
        entity_id: current.id,
        timestamp: metadata.timestamp,
        parent_revision_id: None,
        editor: metadata.editor.clone(),
        tags: Default::default(),
        deltas: diff_entities(parent, current)?,
        reverted: false,
        reverting_editor: None,
        is_revert_of: None,
        entity_is_human: Some(current.is_human()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub ui_tag: String,
    /// Unreverted records kept per reverted one; `None` keeps all.
    pub negative_ratio: Option<u32>,
    pub split_ratio: f64,
    pub holdout_months: u32,
    pub validation_months: u32,
    pub graph2text: Graph2Text,
    pub content: ContentScorerConfig,
    pub final_model: FinalClassifierConfig,
    pub newcomer: NewcomerPolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ui_tag: DEFAULT_UI_TAG.to_owned(),
            negative_ratio: Some(5),
            split_ratio: DEFAULT_SPLIT_RATIO,
            holdout_months: 3,
            validation_months: 3,
            graph2text: Graph2Text::default(),
            content: ContentScorerConfig::default(),
            final_model: FinalClassifierConfig::default(),
            newcomer: NewcomerPolicy::default(),
        }
    }
}

impl PipelineConfig {
    /// Derives every component seed from one master seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.content.seed = seed.wrapping_add(1);
        self.final_model.gbdt.seed = seed.wrapping_add(2);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedCorpus {
    pub split: DatasetSplit,
    pub filter_report: FilterReport,
    pub balanced_size: usize,
}

/// Quality filters, negative balancing and the three-way split.
pub fn prepare_corpus(records: Vec<RevisionRecord>, config: &PipelineConfig) -> Result<PreparedCorpus, PipelineError> {
    let (filtered, filter_report) = apply_quality_filters(records, &config.ui_tag);
    tracing::info!(
        kept = filter_report.output,
        reverted_removed = filter_report.fraction_of_reverted_removed(),
        all_removed = filter_report.fraction_of_all_removed(),
        "quality filters applied"
    );
    let balanced = match config.negative_ratio {
        Some(r) => balance_negatives(filtered, r, config.seed)?,
        None => filtered,
    };
    let balanced_size = balanced.len();
    let cutoff = cutoff_last_months(&balanced, config.holdout_months).ok_or(PipelineError::EmptyCorpus)?;
    let split = split_dataset(balanced, cutoff, config.split_ratio, config.seed)?;
    Ok(PreparedCorpus {
        split,
        filter_report,
        balanced_size,
    })
}

/// Every change of every record, labeled with its revision's label.
pub fn lmc_samples(records: &[RevisionRecord], labels: &LabelMap, g2t: &Graph2Text) -> Vec<(TextualizedChange, bool)> {
    records
        .iter()
        .flat_map(|r| {
            g2t.textualize_revision(&r.deltas, labels, Some(r.entity_id))
                .into_iter()
                .map(move |c| (c, r.reverted))
        })
        .collect()
}

pub fn train_content_stage(
    lmc_train: &[RevisionRecord],
    labels: &LabelMap,
    config: &PipelineConfig,
) -> Result<(ContentScorerModel, TrainingReport), PipelineError> {
    let samples = balance_lmc_training(lmc_samples(lmc_train, labels, &config.graph2text), config.content.seed)?;
    Ok(train_content_scorer(&samples, &config.content)?)
}

pub fn final_rows(
    records: &[RevisionRecord],
    content: &ContentScorerModel,
    labels: &LabelMap,
    index: &PreviousRevisionIndex,
    g2t: &Graph2Text,
) -> Vec<FinalRow> {
    records
        .iter()
        .map(|r| {
            let scores: Vec<f64> = g2t
                .textualize_revision(&r.deltas, labels, Some(r.entity_id))
                .iter()
                .map(|c| content.score_change(c))
                .collect();
            FinalRow {
                metadata: extract_metadata_features(r, index.previous(r.revision_id)),
                content: ContentSummary::from_scores(&scores),
                label: r.reverted,
            }
        })
        .collect()
}

/// Final-classifier training rows and a time-based validation slice taken from
/// the last `validation_months` of `final_train`.
pub fn final_training_rows(
    final_train: &[RevisionRecord],
    content: &ContentScorerModel,
    labels: &LabelMap,
    index: &PreviousRevisionIndex,
    config: &PipelineConfig,
) -> (Vec<FinalRow>, Vec<FinalRow>) {
    let (train, valid) = match cutoff_last_months(final_train, config.validation_months) {
        Some(cut) => split_by_cutoff(final_train.to_vec(), cut),
        None => (Vec::new(), Vec::new()),
    };
    (
        final_rows(&train, content, labels, index, &config.graph2text),
        final_rows(&valid, content, labels, index, &config.graph2text),
    )
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub prepared: PreparedCorpus,
    pub content: ContentScorerModel,
    pub content_report: TrainingReport,
    pub models: BTreeMap<&'static str, FinalClassifierModel>,
    /// Holdout scores per system: the three feature sets and the rule-based baseline.
    pub holdout: BTreeMap<&'static str, ScoredDataset>,
}

impl PipelineOutcome {
    pub fn bundle(&self, feature_set: FeatureSet, g2t: &Graph2Text) -> Option<ModelBundle> {
        self.models
            .get(feature_set.as_str())
            .map(|m| ModelBundle::new(g2t.clone(), self.content.clone(), m.clone()))
    }
}

pub const RULE_BASED: &str = "rule_based";

/// Prepares the corpus, trains the content scorer on LMC-train, trains one
/// final model per feature set on final-train, and scores the holdout with
/// each of them plus the rule-based baseline.
pub fn run_pipeline(
    records: Vec<RevisionRecord>,
    labels: &LabelMap,
    config: &PipelineConfig,
) -> Result<PipelineOutcome, PipelineError> {
    let index = PreviousRevisionIndex::build(&records);
    let prepared = prepare_corpus(records, config)?;
    let split = &prepared.split;
    let (content, content_report) = train_content_stage(&split.lmc_train, labels, config)?;
    let (train_rows, valid_rows) = final_training_rows(&split.final_train, &content, labels, &index, config);
    let holdout_rows = final_rows(&split.holdout, &content, labels, &index, &config.graph2text);

    let mut models = BTreeMap::new();
    let mut holdout = BTreeMap::new();
    for set in FeatureSet::ALL {
        let final_config = FinalClassifierConfig {
            feature_set: set,
            ..config.final_model.clone()
        };
        let model = train_final_classifier(&train_rows, &valid_rows, &final_config)?;
        let rows: Vec<ScoredRow> = holdout_rows
            .iter()
            .zip(&split.holdout)
            .map(|(row, record)| ScoredRow {
                score: model.predict(&row.metadata, &row.content),
                label: row.label,
                groups: record.slice_groups(&config.newcomer),
            })
            .collect();
        holdout.insert(set.as_str(), ScoredDataset::new(rows)?);
        models.insert(set.as_str(), model);
    }
    holdout.insert(RULE_BASED, rule_based_baseline(&split.holdout, &config.newcomer)?);
    Ok(PipelineOutcome {
        prepared,
        content,
        content_report,
        models,
        holdout,
    })
}
