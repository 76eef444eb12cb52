//! Content scorer, metadata features and the final boosted classifier.

pub mod content;
pub mod features;
pub mod final_model;
pub mod gbdt;
pub mod metadata;

use thiserror::Error;

pub use content::{pool_scores, train_content_scorer, ContentScorerConfig, ContentScorerModel, TrainingReport};
pub use final_model::{
    train_final_classifier, ContentSummary, FeatureSet, FinalClassifierConfig, FinalClassifierModel, FinalRow,
};
pub use gbdt::GbdtConfig;
pub use metadata::{extract_metadata_features, MetadataFeatures, PreviousRevisionIndex};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("both classes must be present in the training data")]
    SingleClass,
    #[error("not enough training samples")]
    EmptyInput,
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model was built for template {found}, this build renders {expected}")]
    TemplateMismatch { found: String, expected: String },
}
