use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::diff::{ContentDelta, TargetFamily};
use crate::entity::ItemId;

use super::CorpusError;

/// Who made a revision. Anonymous editors have neither an id nor a
/// registration time; registered editors have both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EditorWire")]
pub struct EditorInfo {
    pub editor_id: Option<String>,
    pub is_anonymous: bool,
    pub registration_time: Option<DateTime<Utc>>,
    #[serde(default)]
    pub groups: BTreeSet<String>,
    #[serde(default)]
    pub prior_edit_count: u64,
}

#[derive(Deserialize)]
struct EditorWire {
    editor_id: Option<String>,
    is_anonymous: bool,
    registration_time: Option<DateTime<Utc>>,
    #[serde(default)]
    groups: BTreeSet<String>,
    #[serde(default)]
    prior_edit_count: u64,
}

impl TryFrom<EditorWire> for EditorInfo {
    type Error = CorpusError;

    fn try_from(w: EditorWire) -> Result<Self, Self::Error> {
        let editor = EditorInfo {
            editor_id: w.editor_id,
            is_anonymous: w.is_anonymous,
            registration_time: w.registration_time,
            groups: w.groups,
            prior_edit_count: w.prior_edit_count,
        };
        editor.validate()?;
        Ok(editor)
    }
}

impl EditorInfo {
    pub fn anonymous() -> Self {
        Self {
            editor_id: None,
            is_anonymous: true,
            registration_time: None,
            groups: BTreeSet::new(),
            prior_edit_count: 0,
        }
    }

    pub fn registered(id: impl Into<String>, registration_time: DateTime<Utc>, prior_edit_count: u64) -> Self {
        Self {
            editor_id: Some(id.into()),
            is_anonymous: false,
            registration_time: Some(registration_time),
            groups: BTreeSet::new(),
            prior_edit_count,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let consistent = self.is_anonymous == self.editor_id.is_none()
            && self.is_anonymous == self.registration_time.is_none();
        if consistent {
            Ok(())
        } else {
            Err(CorpusError::InvalidRecord(
                "editor anonymity must match absence of editor_id and registration_time".into(),
            ))
        }
    }

    /// Account age at `at`, zero for anonymous editors and clamped at zero.
    pub fn account_age(&self, at: DateTime<Utc>) -> Duration {
        self.registration_time
            .map(|reg| (at - reg).max(Duration::zero()))
            .unwrap_or_else(Duration::zero)
    }
}

/// Threshold deciding which registered editors count as newcomers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewcomerPolicy {
    pub max_account_age_days: i64,
    pub min_prior_edits: u64,
}

impl Default for NewcomerPolicy {
    fn default() -> Self {
        Self {
            max_account_age_days: 30,
            min_prior_edits: 50,
        }
    }
}

impl NewcomerPolicy {
    /// `None` for anonymous editors, who are sliced separately.
    pub fn is_newcomer(&self, editor: &EditorInfo, at: DateTime<Utc>) -> Option<bool> {
        if editor.is_anonymous {
            return None;
        }
        let young = editor.account_age(at) < Duration::days(self.max_account_age_days);
        Some(young || editor.prior_edit_count < self.min_prior_edits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionRecord {
    pub revision_id: u64,
    pub entity_id: ItemId,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub parent_revision_id: Option<u64>,
    pub editor: EditorInfo,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default)]
    pub deltas: Vec<ContentDelta>,
    pub reverted: bool,
    #[serde(default)]
    pub reverting_editor: Option<String>,
    #[serde(default)]
    pub is_revert_of: Option<u64>,
    /// Whether the entity is an instance of human, when known. Used for slicing only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_is_human: Option<bool>,
}

pub mod slices {
    pub const EDITOR: &str = "editor";
    pub const TENURE: &str = "tenure";
    pub const ENTITY: &str = "entity";
    pub const CONTENT: &str = "content";
    pub const LANGUAGE: &str = "language";
}

impl RevisionRecord {
    pub fn has_textual_change(&self) -> bool {
        self.deltas.iter().any(|d| d.target().family().is_textual())
    }

    pub fn has_statement_change(&self) -> bool {
        self.deltas
            .iter()
            .any(|d| d.target().family() == TargetFamily::Statement)
    }

    /// English if any textual delta is in English; `None` without textual deltas.
    pub fn touches_english(&self) -> Option<bool> {
        let mut langs = self.deltas.iter().filter_map(|d| d.target().language()).peekable();
        langs.peek()?;
        Some(langs.any(|l| l.is_english()))
    }

    /// Group memberships used for sliced evaluation and fairness metrics.
    pub fn slice_groups(&self, policy: &NewcomerPolicy) -> BTreeMap<String, String> {
        let mut groups = BTreeMap::new();
        let mut put = |k: &str, v: &str| {
            groups.insert(k.to_owned(), v.to_owned());
        };
        put(
            slices::EDITOR,
            if self.editor.is_anonymous { "anonymous" } else { "registered" },
        );
        if let Some(new) = policy.is_newcomer(&self.editor, self.timestamp) {
            put(slices::TENURE, if new { "new" } else { "experienced" });
        }
        if let Some(human) = self.entity_is_human {
            put(slices::ENTITY, if human { "human" } else { "non-human" });
        }
        put(
            slices::CONTENT,
            if self.has_textual_change() { "textual" } else { "non-textual" },
        );
        if let Some(english) = self.touches_english() {
            put(slices::LANGUAGE, if english { "english" } else { "non-english" });
        }
        groups
    }
}
