use std::collections::HashMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::RevisionRecord;
use crate::diff::{classify_revision_shape, ContentDelta, RevisionShape};

/// Value of `seconds_since_previous` for the first revision of an entity.
pub const FIRST_EDIT_SENTINEL: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataFeatures {
    pub is_anonymous: bool,
    /// Zero for anonymous editors.
    pub account_age_seconds: f64,
    pub prior_edit_count: u64,
    /// [`FIRST_EDIT_SENTINEL`] when the entity has no earlier revision.
    pub seconds_since_previous: f64,
    pub n_deltas: usize,
    pub revision_shape: RevisionShape,
    pub has_textual_change: bool,
    pub has_statement_change: bool,
}

pub const METADATA_FEATURE_NAMES: [&str; 12] = [
    "is_anonymous",
    "account_age_seconds",
    "prior_edit_count",
    "seconds_since_previous",
    "is_first_edit",
    "n_deltas",
    "shape_insert_only",
    "shape_change_only",
    "shape_remove_only",
    "shape_mixed",
    "has_textual_change",
    "has_statement_change",
];

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl MetadataFeatures {
    pub fn is_first_edit(&self) -> bool {
        self.seconds_since_previous == FIRST_EDIT_SENTINEL
    }

    pub fn shape_one_hot(&self) -> [f64; 4] {
        RevisionShape::ALL.map(|s| flag(s == self.revision_shape))
    }

    /// Columns in [`METADATA_FEATURE_NAMES`] order.
    pub fn to_vector(&self) -> [f64; 12] {
        let shape = self.shape_one_hot();
        [
            flag(self.is_anonymous),
            self.account_age_seconds,
            self.prior_edit_count as f64,
            self.seconds_since_previous,
            flag(self.is_first_edit()),
            self.n_deltas as f64,
            shape[0],
            shape[1],
            shape[2],
            shape[3],
            flag(self.has_textual_change),
            flag(self.has_statement_change),
        ]
    }
}

/// Shape used for features. A revision without content deltas counts as
/// mixed so the one-hot stays well formed; `n_deltas = 0` marks it.
pub fn feature_shape(deltas: &[ContentDelta]) -> RevisionShape {
    classify_revision_shape(deltas).unwrap_or(RevisionShape::Mixed)
}

pub fn extract_metadata_features(record: &RevisionRecord, previous: Option<DateTime<Utc>>) -> MetadataFeatures {
    let at = record.timestamp;
    MetadataFeatures {
        is_anonymous: record.editor.is_anonymous,
        account_age_seconds: record.editor.account_age(at).num_seconds() as f64,
        prior_edit_count: record.editor.prior_edit_count,
        seconds_since_previous: previous
            .map(|p| (at - p).num_seconds().max(0) as f64)
            .unwrap_or(FIRST_EDIT_SENTINEL),
        n_deltas: record.deltas.len(),
        revision_shape: feature_shape(&record.deltas),
        has_textual_change: record.has_textual_change(),
        has_statement_change: record.has_statement_change(),
    }
}

/// Timestamp of the preceding revision on the same entity, by revision id.
#[derive(Debug, Clone, Default)]
pub struct PreviousRevisionIndex {
    previous: HashMap<u64, DateTime<Utc>>,
}

impl PreviousRevisionIndex {
    /// Orders each entity's history by (timestamp, revision id).
    pub fn build(records: &[RevisionRecord]) -> Self {
        let mut by_entity: HashMap<_, Vec<(DateTime<Utc>, u64)>> = HashMap::new();
        for r in records {
            by_entity.entry(r.entity_id).or_default().push((r.timestamp, r.revision_id));
        }
        let mut previous = HashMap::new();
        for (_, mut history) in by_entity {
            history.sort_unstable();
            for pair in history.windows(2) {
                previous.insert(pair[1].1, pair[0].0);
            }
        }
        Self { previous }
    }

    pub fn previous(&self, revision_id: u64) -> Option<DateTime<Utc>> {
        self.previous.get(&revision_id).copied()
    }
}
