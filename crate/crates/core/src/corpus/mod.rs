//! Labeled revision corpora: the canonical record type, quality filters,
//! class balancing and the three-way dataset split.

mod balance;
mod filters;
pub mod ingest;
mod io;
mod record;
pub mod reverts;
mod split;

use thiserror::Error;

pub use balance::{balance_lmc_training, balance_negatives};
pub use filters::{
    apply_quality_filters, edit_war_members, filter_edit_wars, filter_human_ui_edits,
    filter_self_reverts, FilterReport, DEFAULT_UI_TAG,
};
pub use io::{read_jsonl, write_jsonl};
pub use record::{slices, EditorInfo, NewcomerPolicy, RevisionRecord};
pub use split::{
    assign_entities, cutoff_last_months, split_by_cutoff, split_dataset, DatasetSplit,
    DEFAULT_SPLIT_RATIO,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("balance ratio must be at least 1, got {0}")]
    InvalidRatio(u32),
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidSplitRatio(f64),
    #[error("partition {0} would be empty")]
    EmptyPartition(&'static str),
    #[error("both classes must be present")]
    SingleClass,
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Entity(#[from] crate::entity::EntityError),
    #[error(transparent)]
    Diff(#[from] crate::diff::DiffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
