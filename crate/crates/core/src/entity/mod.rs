//! Knowledge-graph entity documents.
//!
//! The accepted input dialect is Wikibase entity JSON (`labels`, `descriptions`,
//! `aliases`, `claims`). Parsing normalizes it into [`EntityDocument`], which the
//! rest of the crate works with. Statement value kinds that have no dedicated
//! [`StatementValue`] variant are kept as [`StatementValue::Text`] holding the
//! canonical JSON of their datavalue, so changes to them remain visible.

mod ids;
mod labels;
mod wikibase;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use ids::{Identifier, ItemId, LanguageCode, PropertyId};
pub use labels::{resolve_label, resolve_label_str, LabelMap, UNKNOWN_LABEL};
pub use wikibase::{canonical_json, parse_entity};

#[derive(Debug, thiserror::Error)]
pub enum EntityError {
    #[error("malformed entity document: {0}")]
    MalformedDocument(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("invalid language code `{0}`")]
    InvalidLanguage(String),
    #[error("invalid statement value: {0}")]
    InvalidValue(String),
    #[error("label map line {line}: {message}")]
    LabelMap { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The value side of a `{entity, property, value}` triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StatementValue {
    EntityRef {
        id: Identifier,
    },
    Text {
        value: String,
    },
    MonolingualText {
        language: LanguageCode,
        text: String,
    },
    /// `amount` keeps the source decimal string (`+12.5`) so it round-trips exactly.
    Quantity {
        amount: String,
        unit: Option<ItemId>,
    },
    TimePoint {
        time: String,
        precision: u8,
    },
    Coordinate {
        latitude: f64,
        longitude: f64,
    },
    SomeValue,
    NoValue,
}

pub const MAX_TIME_PRECISION: u8 = 14;

impl StatementValue {
    pub fn validate(&self) -> Result<(), EntityError> {
        match self {
            StatementValue::Coordinate {
                latitude,
                longitude,
            } => {
                if !(-90.0..=90.0).contains(latitude) || !(-180.0..=180.0).contains(longitude) {
                    return Err(EntityError::InvalidValue(format!(
                        "coordinate ({latitude}, {longitude}) out of range"
                    )));
                }
            }
            StatementValue::TimePoint { precision, .. } if *precision > MAX_TIME_PRECISION => {
                return Err(EntityError::InvalidValue(format!(
                    "time precision {precision} exceeds {MAX_TIME_PRECISION}"
                )));
            }
            StatementValue::Quantity { amount, .. } if !wikibase::is_decimal(amount) => {
                return Err(EntityError::InvalidValue(format!(
                    "quantity amount `{amount}` is not a decimal"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    /// Canonical JSON string of this value, used as a total ordering key.
    pub fn sort_key(&self) -> String {
        serde_json::to_string(self).expect("statement values always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Deprecated,
    #[default]
    Normal,
    Preferred,
}

/// One statement. Rank and qualifiers are carried through parsing and
/// serialization but the diff engine looks only at `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub property: PropertyId,
    pub value: StatementValue,
    pub rank: Rank,
    pub qualifiers: Vec<(PropertyId, StatementValue)>,
}

impl Statement {
    pub fn new(property: PropertyId, value: StatementValue) -> Self {
        Self {
            property,
            value,
            rank: Rank::Normal,
            qualifiers: Vec::new(),
        }
    }
}

/// Normalized entity document. Empty alias and statement lists are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityDocument {
    pub id: ItemId,
    pub labels: BTreeMap<LanguageCode, String>,
    pub descriptions: BTreeMap<LanguageCode, String>,
    pub aliases: BTreeMap<LanguageCode, Vec<String>>,
    pub statements: BTreeMap<PropertyId, Vec<Statement>>,
}

/// `P31` ("instance of") pointing at `Q5` ("human").
const INSTANCE_OF: u64 = 31;
const HUMAN: u64 = 5;

impl EntityDocument {
    pub fn new(id: ItemId) -> Self {
        Self {
            id,
            labels: BTreeMap::new(),
            descriptions: BTreeMap::new(),
            aliases: BTreeMap::new(),
            statements: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        wikibase::to_wikibase_json(self)
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_json()).expect("entity documents always serialize")
    }

    pub fn statement_count(&self) -> usize {
        self.statements.values().map(Vec::len).sum()
    }

    pub fn is_human(&self) -> bool {
        self.statements
            .iter()
            .filter(|(p, _)| p.number() == INSTANCE_OF)
            .flat_map(|(_, list)| list)
            .any(|s| matches!(&s.value, StatementValue::EntityRef { id: Identifier::Item(q) } if q.number() == HUMAN))
    }

    /// Equality over the fields the diff engine covers: labels, descriptions,
    /// alias sets and per-property statement value multisets.
    pub fn same_content(&self, other: &EntityDocument) -> bool {
        fn alias_sets(doc: &EntityDocument) -> BTreeMap<&LanguageCode, Vec<&str>> {
            doc.aliases
                .iter()
                .map(|(lang, list)| {
                    let mut sorted: Vec<&str> = list.iter().map(String::as_str).collect();
                    sorted.sort_unstable();
                    (lang, sorted)
                })
                .collect()
        }
        fn value_multisets(doc: &EntityDocument) -> BTreeMap<PropertyId, Vec<String>> {
            doc.statements
                .iter()
                .map(|(p, list)| {
                    let mut keys: Vec<String> = list.iter().map(|s| s.value.sort_key()).collect();
                    keys.sort_unstable();
                    (*p, keys)
                })
                .collect()
        }
        self.id == other.id
            && self.labels == other.labels
            && self.descriptions == other.descriptions
            && alias_sets(self) == alias_sets(other)
            && value_multisets(self) == value_multisets(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_range_is_enforced() {
        let ok = StatementValue::Coordinate {
            latitude: 42.7,
            longitude: 25.5,
        };
        assert!(ok.validate().is_ok());
        let bad = StatementValue::Coordinate {
            latitude: 91.0,
            longitude: 0.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn human_detection_uses_instance_of() {
        let mut doc = EntityDocument::new(ItemId::new(42).unwrap());
        assert!(!doc.is_human());
        let p31 = PropertyId::new(31).unwrap();
        doc.statements.insert(
            p31,
            vec![Statement::new(
                p31,
                StatementValue::EntityRef {
                    id: ItemId::new(5).unwrap().into(),
                },
            )],
        );
        assert!(doc.is_human());
    }
}
