//! Adapter from raw revision dumps (full parent and current entity JSON per
//! row) to canonical [`RevisionRecord`]s.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CorpusError, EditorInfo, RevisionRecord};
use crate::diff::diff_entities;
use crate::entity::{parse_entity, EntityDocument, ItemId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRevision {
    pub revision_id: u64,
    #[serde(default)]
    pub entity_id: Option<ItemId>,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub parent_revision_id: Option<u64>,
    pub editor: EditorInfo,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    /// Entity JSON before the edit, either inline or as a string. Absent for page creations.
    #[serde(default)]
    pub parent_content: Option<Value>,
    pub current_content: Value,
    #[serde(default)]
    pub reverted: bool,
    #[serde(default)]
    pub reverting_editor: Option<String>,
    #[serde(default)]
    pub is_revert_of: Option<u64>,
}

fn parse_content(content: &Value) -> Result<EntityDocument, CorpusError> {
    let doc = match content {
        Value::String(s) => parse_entity(s.as_bytes())?,
        other => parse_entity(other.to_string().as_bytes())?,
    };
    Ok(doc)
}

pub fn ingest(raw: RawRevision) -> Result<RevisionRecord, CorpusError> {
    raw.editor.validate()?;
    let current = parse_content(&raw.current_content)?;
    let parent = raw.parent_content.as_ref().map(parse_content).transpose()?;
    if let Some(id) = raw.entity_id {
        if id != current.id {
            return Err(CorpusError::InvalidRecord(format!(
                "revision {} declares {id} but content is {}",
                raw.revision_id, current.id
            )));
        }
    }
    let deltas = diff_entities(parent.as_ref(), &current)?;
    Ok(RevisionRecord {
        revision_id: raw.revision_id,
        entity_id: current.id,
        timestamp: raw.timestamp,
        parent_revision_id: raw.parent_revision_id,
        editor: raw.editor,
        tags: raw.tags,
        deltas,
        reverted: raw.reverted,
        reverting_editor: raw.reverting_editor,
        is_revert_of: raw.is_revert_of,
        entity_is_human: Some(current.is_human()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{DeltaAction, TargetFamily};

    #[test]
    fn string_and_inline_content_both_work() {
        let parent = r#"{"id":"Q7","labels":{"en":{"language":"en","value":"Old"}}}"#;
        let current = serde_json::json!({
            "id": "Q7",
            "labels": {"en": {"language": "en", "value": "New"}},
            "claims": {"P31": [{"mainsnak": {"snaktype": "value", "property": "P31",
                "datavalue": {"type": "wikibase-entityid", "value": {"id": "Q5"}}}, "rank": "normal"}]}
        });
        let raw = RawRevision {
            revision_id: 10,
            entity_id: Some("Q7".parse().unwrap()),
            timestamp: Utc::now(),
            parent_revision_id: Some(9),
            editor: EditorInfo::anonymous(),
            tags: BTreeSet::new(),
            parent_content: Some(Value::String(parent.into())),
            current_content: current,
            reverted: true,
            reverting_editor: None,
            is_revert_of: None,
        };
        let rec = ingest(raw).unwrap();
        assert_eq!(rec.entity_is_human, Some(true));
        let kinds: Vec<_> = rec.deltas.iter().map(|d| (d.action(), d.target().family())).collect();
        assert_eq!(
            kinds,
            vec![
                (DeltaAction::Change, TargetFamily::Label),
                (DeltaAction::Insert, TargetFamily::Statement)
            ]
        );
    }

    #[test]
    fn mismatched_entity_is_rejected() {
        let raw = RawRevision {
            revision_id: 1,
            entity_id: Some("Q1".parse().unwrap()),
            timestamp: Utc::now(),
            parent_revision_id: None,
            editor: EditorInfo::anonymous(),
            tags: BTreeSet::new(),
            parent_content: Some(serde_json::json!({"id": "Q2"})),
            current_content: serde_json::json!({"id": "Q2"}),
            reverted: false,
            reverting_editor: None,
            is_revert_of: None,
        };
        assert!(matches!(ingest(raw), Err(CorpusError::InvalidRecord(_))));
    }
}
