//! Fine-grained structural differences between two revisions of an entity.
//!
//! Deltas are emitted in a fixed order: labels, descriptions, aliases, then
//! statements, and within each family by key. Statement lists are aligned per
//! property as multisets of values: unmatched old values become removes,
//! unmatched new values become inserts, except that exactly one unmatched
//! value on each side collapses into a single change. Aliases are per-language
//! sets, so they only ever produce inserts and removes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::entity::{EntityDocument, ItemId, LanguageCode, PropertyId, Statement, StatementValue};

#[derive(Debug, thiserror::Error)]
pub enum DiffError {
    #[error("entity mismatch: parent is {parent}, current is {current}")]
    EntityMismatch { parent: ItemId, current: ItemId },
    #[error("inconsistent delta: {0}")]
    InconsistentDelta(String),
    #[error("invalid delta: {0}")]
    InvalidDelta(String),
    #[error("revision has no content deltas")]
    EmptyRevision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaAction {
    Insert,
    Remove,
    Change,
}

impl DeltaAction {
    pub const ALL: [DeltaAction; 3] = [DeltaAction::Insert, DeltaAction::Remove, DeltaAction::Change];

    pub fn as_str(self) -> &'static str {
        match self {
            DeltaAction::Insert => "insert",
            DeltaAction::Remove => "remove",
            DeltaAction::Change => "change",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetFamily {
    Label,
    Description,
    Alias,
    Statement,
}

impl TargetFamily {
    pub const ALL: [TargetFamily; 4] = [
        TargetFamily::Label,
        TargetFamily::Description,
        TargetFamily::Alias,
        TargetFamily::Statement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetFamily::Label => "label",
            TargetFamily::Description => "description",
            TargetFamily::Alias => "alias",
            TargetFamily::Statement => "statement",
        }
    }

    pub fn is_textual(self) -> bool {
        self != TargetFamily::Statement
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeltaTarget {
    Label(LanguageCode),
    Description(LanguageCode),
    Alias(LanguageCode),
    Statement(PropertyId),
}

impl DeltaTarget {
    pub fn family(&self) -> TargetFamily {
        match self {
            DeltaTarget::Label(_) => TargetFamily::Label,
            DeltaTarget::Description(_) => TargetFamily::Description,
            DeltaTarget::Alias(_) => TargetFamily::Alias,
            DeltaTarget::Statement(_) => TargetFamily::Statement,
        }
    }

    pub fn language(&self) -> Option<&LanguageCode> {
        match self {
            DeltaTarget::Label(l) | DeltaTarget::Description(l) | DeltaTarget::Alias(l) => Some(l),
            DeltaTarget::Statement(_) => None,
        }
    }

    pub fn property(&self) -> Option<PropertyId> {
        match self {
            DeltaTarget::Statement(p) => Some(*p),
            _ => None,
        }
    }
}

impl fmt::Display for DeltaTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaTarget::Statement(p) => write!(f, "statement({p})"),
            other => write!(
                f,
                "{}({})",
                other.family().as_str(),
                other.language().expect("textual targets carry a language")
            ),
        }
    }
}

// Serialized through the display form, e.g. `statement(P85)`.
impl Serialize for DeltaTarget {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DeltaTarget {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        let (family, arg) = raw
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .ok_or_else(|| serde::de::Error::custom(format!("bad target `{raw}`")))?;
        let lang = || LanguageCode::new(arg).map_err(serde::de::Error::custom);
        Ok(match family {
            "label" => DeltaTarget::Label(lang()?),
            "description" => DeltaTarget::Description(lang()?),
            "alias" => DeltaTarget::Alias(lang()?),
            "statement" => DeltaTarget::Statement(arg.parse().map_err(serde::de::Error::custom)?),
            _ => return Err(serde::de::Error::custom(format!("bad target `{raw}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeltaValue {
    PlainText(String),
    TripleValue(StatementValue),
}

/// One insert, remove or change. Construction validates the action/value
/// presence rules and that the value kind matches the target family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeltaWire", into = "DeltaWire")]
pub struct ContentDelta {
    action: DeltaAction,
    target: DeltaTarget,
    old_value: Option<DeltaValue>,
    new_value: Option<DeltaValue>,
}

impl ContentDelta {
    pub fn new(
        action: DeltaAction,
        target: DeltaTarget,
        old_value: Option<DeltaValue>,
        new_value: Option<DeltaValue>,
    ) -> Result<Self, DiffError> {
        let presence_ok = match action {
            DeltaAction::Insert => old_value.is_none() && new_value.is_some(),
            DeltaAction::Remove => old_value.is_some() && new_value.is_none(),
            DeltaAction::Change => {
                old_value.is_some() && new_value.is_some() && old_value != new_value
            }
        };
        if !presence_ok {
            return Err(DiffError::InvalidDelta(format!(
                "{} on {target} has wrong old/new presence",
                action.as_str()
            )));
        }
        let textual = target.family().is_textual();
        for value in old_value.iter().chain(new_value.iter()) {
            match (value, textual) {
                (DeltaValue::PlainText(_), true) => {}
                (DeltaValue::TripleValue(v), false) => v
                    .validate()
                    .map_err(|e| DiffError::InvalidDelta(e.to_string()))?,
                _ => {
                    return Err(DiffError::InvalidDelta(format!(
                        "value kind does not match target {target}"
                    )))
                }
            }
        }
        Ok(Self {
            action,
            target,
            old_value,
            new_value,
        })
    }

    pub fn insert_text(target: DeltaTarget, text: impl Into<String>) -> Result<Self, DiffError> {
        Self::new(DeltaAction::Insert, target, None, Some(DeltaValue::PlainText(text.into())))
    }

    pub fn insert_statement(property: PropertyId, value: StatementValue) -> Result<Self, DiffError> {
        Self::new(
            DeltaAction::Insert,
            DeltaTarget::Statement(property),
            None,
            Some(DeltaValue::TripleValue(value)),
        )
    }

    pub fn action(&self) -> DeltaAction {
        self.action
    }

    pub fn target(&self) -> &DeltaTarget {
        &self.target
    }

    pub fn old_value(&self) -> Option<&DeltaValue> {
        self.old_value.as_ref()
    }

    pub fn new_value(&self) -> Option<&DeltaValue> {
        self.new_value.as_ref()
    }

    /// The delta that undoes this one: inserts become removes and vice versa,
    /// changes swap their sides.
    pub fn inverted(&self) -> Self {
        let action = match self.action {
            DeltaAction::Insert => DeltaAction::Remove,
            DeltaAction::Remove => DeltaAction::Insert,
            DeltaAction::Change => DeltaAction::Change,
        };
        Self {
            action,
            target: self.target.clone(),
            old_value: self.new_value.clone(),
            new_value: self.old_value.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DeltaWire {
    action: DeltaAction,
    target: TargetFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lang: Option<LanguageCode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    property: Option<PropertyId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    old: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    new: Option<serde_json::Value>,
}

impl From<ContentDelta> for DeltaWire {
    fn from(delta: ContentDelta) -> Self {
        let encode = |value: Option<DeltaValue>| {
            value.map(|v| match v {
                DeltaValue::PlainText(text) => serde_json::Value::String(text),
                DeltaValue::TripleValue(value) => {
                    serde_json::to_value(value).expect("statement values always serialize")
                }
            })
        };
        DeltaWire {
            action: delta.action,
            target: delta.target.family(),
            lang: delta.target.language().cloned(),
            property: delta.target.property(),
            old: encode(delta.old_value),
            new: encode(delta.new_value),
        }
    }
}

impl TryFrom<DeltaWire> for ContentDelta {
    type Error = DiffError;

    fn try_from(wire: DeltaWire) -> Result<Self, Self::Error> {
        let missing = |what: &str| DiffError::InvalidDelta(format!("{} delta without `{what}`", wire.target.as_str()));
        let target = match wire.target {
            TargetFamily::Statement => {
                DeltaTarget::Statement(wire.property.ok_or_else(|| missing("property"))?)
            }
            family => {
                let lang = wire.lang.clone().ok_or_else(|| missing("lang"))?;
                match family {
                    TargetFamily::Label => DeltaTarget::Label(lang),
                    TargetFamily::Description => DeltaTarget::Description(lang),
                    _ => DeltaTarget::Alias(lang),
                }
            }
        };
        let textual = wire.target.is_textual();
        let decode = |raw: Option<serde_json::Value>| -> Result<Option<DeltaValue>, DiffError> {
            raw.map(|raw| {
                if textual {
                    raw.as_str()
                        .map(|s| DeltaValue::PlainText(s.to_owned()))
                        .ok_or_else(|| DiffError::InvalidDelta("textual value is not a string".into()))
                } else {
                    serde_json::from_value::<StatementValue>(raw)
                        .map(DeltaValue::TripleValue)
                        .map_err(|e| DiffError::InvalidDelta(e.to_string()))
                }
            })
            .transpose()
        };
        ContentDelta::new(wire.action, target, decode(wire.old)?, decode(wire.new)?)
    }
}

/// Coarse modification type of a whole revision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevisionShape {
    InsertOnly,
    ChangeOnly,
    RemoveOnly,
    Mixed,
}

impl RevisionShape {
    pub const ALL: [RevisionShape; 4] = [
        RevisionShape::InsertOnly,
        RevisionShape::ChangeOnly,
        RevisionShape::RemoveOnly,
        RevisionShape::Mixed,
    ];
}

pub fn classify_revision_shape(deltas: &[ContentDelta]) -> Result<RevisionShape, DiffError> {
    let first = deltas.first().ok_or(DiffError::EmptyRevision)?.action;
    if deltas.iter().any(|d| d.action != first) {
        return Ok(RevisionShape::Mixed);
    }
    Ok(match first {
        DeltaAction::Insert => RevisionShape::InsertOnly,
        DeltaAction::Change => RevisionShape::ChangeOnly,
        DeltaAction::Remove => RevisionShape::RemoveOnly,
    })
}

fn diff_text_maps(
    parent: &std::collections::BTreeMap<LanguageCode, String>,
    current: &std::collections::BTreeMap<LanguageCode, String>,
    make_target: fn(LanguageCode) -> DeltaTarget,
    out: &mut Vec<ContentDelta>,
) {
    let mut langs: Vec<&LanguageCode> = parent.keys().chain(current.keys()).collect();
    langs.sort_unstable();
    langs.dedup();
    for lang in langs {
        let target = make_target(lang.clone());
        let (action, old, new) = match (parent.get(lang), current.get(lang)) {
            (None, Some(new)) => (DeltaAction::Insert, None, Some(new)),
            (Some(old), None) => (DeltaAction::Remove, Some(old), None),
            (Some(old), Some(new)) if old != new => (DeltaAction::Change, Some(old), Some(new)),
            _ => continue,
        };
        out.push(ContentDelta {
            action,
            target,
            old_value: old.map(|t| DeltaValue::PlainText(t.clone())),
            new_value: new.map(|t| DeltaValue::PlainText(t.clone())),
        });
    }
}

fn diff_aliases(parent: &EntityDocument, current: &EntityDocument, out: &mut Vec<ContentDelta>) {
    let mut langs: Vec<&LanguageCode> = parent.aliases.keys().chain(current.aliases.keys()).collect();
    langs.sort_unstable();
    langs.dedup();
    let empty = Vec::new();
    for lang in langs {
        let old = parent.aliases.get(lang).unwrap_or(&empty);
        let new = current.aliases.get(lang).unwrap_or(&empty);
        for text in old.iter().filter(|t| !new.contains(t)) {
            out.push(ContentDelta {
                action: DeltaAction::Remove,
                target: DeltaTarget::Alias(lang.clone()),
                old_value: Some(DeltaValue::PlainText(text.clone())),
                new_value: None,
            });
        }
        for text in new.iter().filter(|t| !old.contains(t)) {
            out.push(ContentDelta {
                action: DeltaAction::Insert,
                target: DeltaTarget::Alias(lang.clone()),
                old_value: None,
                new_value: Some(DeltaValue::PlainText(text.clone())),
            });
        }
    }
}

fn diff_statements(parent: &EntityDocument, current: &EntityDocument, out: &mut Vec<ContentDelta>) {
    let mut props: Vec<&PropertyId> = parent.statements.keys().chain(current.statements.keys()).collect();
    props.sort_unstable();
    props.dedup();
    let empty: Vec<Statement> = Vec::new();
    for property in props {
        let old = parent.statements.get(property).unwrap_or(&empty);
        let new = current.statements.get(property).unwrap_or(&empty);
        let mut matched = vec![false; old.len()];
        let mut inserted: Vec<&StatementValue> = Vec::new();
        for statement in new {
            let hit = (0..old.len()).find(|&i| !matched[i] && old[i].value == statement.value);
            match hit {
                Some(i) => matched[i] = true,
                None => inserted.push(&statement.value),
            }
        }
        let removed: Vec<&StatementValue> = old
            .iter()
            .zip(&matched)
            .filter(|(_, m)| !**m)
            .map(|(s, _)| &s.value)
            .collect();
        let target = DeltaTarget::Statement(*property);
        let triple = |v: &StatementValue| Some(DeltaValue::TripleValue(v.clone()));
        if removed.len() == 1 && inserted.len() == 1 {
            out.push(ContentDelta {
                action: DeltaAction::Change,
                target,
                old_value: triple(removed[0]),
                new_value: triple(inserted[0]),
            });
            continue;
        }
        for value in removed {
            out.push(ContentDelta {
                action: DeltaAction::Remove,
                target: target.clone(),
                old_value: triple(value),
                new_value: None,
            });
        }
        for value in inserted {
            out.push(ContentDelta {
                action: DeltaAction::Insert,
                target: target.clone(),
                old_value: None,
                new_value: triple(value),
            });
        }
    }
}

/// Computes the deltas that turn `parent` into `current`. A missing parent
/// (page creation) is treated as an empty document with the current id.
pub fn diff_entities(
    parent: Option<&EntityDocument>,
    current: &EntityDocument,
) -> Result<Vec<ContentDelta>, DiffError> {
    let blank;
    let parent = match parent {
        Some(p) if p.id != current.id => {
            return Err(DiffError::EntityMismatch {
                parent: p.id,
                current: current.id,
            })
        }
        Some(p) => p,
        None => {
            blank = EntityDocument::new(current.id);
            &blank
        }
    };
    let mut out = Vec::new();
    diff_text_maps(&parent.labels, &current.labels, DeltaTarget::Label, &mut out);
    diff_text_maps(
        &parent.descriptions,
        &current.descriptions,
        DeltaTarget::Description,
        &mut out,
    );
    diff_aliases(parent, current, &mut out);
    diff_statements(parent, current, &mut out);
    Ok(out)
}

fn text_of(value: Option<&DeltaValue>) -> &str {
    match value {
        Some(DeltaValue::PlainText(t)) => t,
        _ => unreachable!("textual deltas always carry plain text"),
    }
}

fn triple_of(value: Option<&DeltaValue>) -> &StatementValue {
    match value {
        Some(DeltaValue::TripleValue(v)) => v,
        _ => unreachable!("statement deltas always carry triple values"),
    }
}

fn apply_text(
    map: &mut std::collections::BTreeMap<LanguageCode, String>,
    lang: &LanguageCode,
    delta: &ContentDelta,
) -> Result<(), DiffError> {
    let inconsistent = || DiffError::InconsistentDelta(format!("{} on {}", delta.action.as_str(), delta.target));
    match delta.action {
        DeltaAction::Insert => {
            if map.contains_key(lang) {
                return Err(inconsistent());
            }
            map.insert(lang.clone(), text_of(delta.new_value()).to_owned());
        }
        DeltaAction::Remove => {
            if map.get(lang).map(String::as_str) != Some(text_of(delta.old_value())) {
                return Err(inconsistent());
            }
            map.remove(lang);
        }
        DeltaAction::Change => {
            let slot = map.get_mut(lang).ok_or_else(inconsistent)?;
            if slot != text_of(delta.old_value()) {
                return Err(inconsistent());
            }
            *slot = text_of(delta.new_value()).to_owned();
        }
    }
    Ok(())
}

/// Applies deltas produced by [`diff_entities`] to `parent`.
///
/// The result matches the original current document on every diffed field
/// (see [`EntityDocument::same_content`]); statement order within a property
/// and rank/qualifiers of changed statements are not reconstructed.
pub fn apply_deltas(parent: &EntityDocument, deltas: &[ContentDelta]) -> Result<EntityDocument, DiffError> {
    let mut doc = parent.clone();
    for delta in deltas {
        let inconsistent = || DiffError::InconsistentDelta(format!("{} on {}", delta.action.as_str(), delta.target));
        match &delta.target {
            DeltaTarget::Label(lang) => apply_text(&mut doc.labels, lang, delta)?,
            DeltaTarget::Description(lang) => apply_text(&mut doc.descriptions, lang, delta)?,
            DeltaTarget::Alias(lang) => match delta.action {
                DeltaAction::Insert => {
                    let text = text_of(delta.new_value());
                    let list = doc.aliases.entry(lang.clone()).or_default();
                    if list.iter().any(|a| a == text) {
                        return Err(inconsistent());
                    }
                    list.push(text.to_owned());
                }
                DeltaAction::Remove => {
                    let text = text_of(delta.old_value());
                    let list = doc.aliases.get_mut(lang).ok_or_else(inconsistent)?;
                    let pos = list.iter().position(|a| a == text).ok_or_else(inconsistent)?;
                    list.remove(pos);
                    if list.is_empty() {
                        doc.aliases.remove(lang);
                    }
                }
                DeltaAction::Change => return Err(inconsistent()),
            },
            DeltaTarget::Statement(property) => match delta.action {
                DeltaAction::Insert => {
                    doc.statements
                        .entry(*property)
                        .or_default()
                        .push(Statement::new(*property, triple_of(delta.new_value()).clone()));
                }
                DeltaAction::Remove | DeltaAction::Change => {
                    let old = triple_of(delta.old_value());
                    let list = doc.statements.get_mut(property).ok_or_else(inconsistent)?;
                    let pos = list.iter().position(|s| &s.value == old).ok_or_else(inconsistent)?;
                    if delta.action == DeltaAction::Change {
                        list[pos] = Statement::new(*property, triple_of(delta.new_value()).clone());
                    } else {
                        list.remove(pos);
                        if list.is_empty() {
                            doc.statements.remove(property);
                        }
                    }
                }
            },
        }
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::parse_entity;
    use crate::synthetic::documents::{random_document, random_edit};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lang(code: &str) -> LanguageCode {
        LanguageCode::new(code).unwrap()
    }

    fn bulgaria(anthem: &str) -> EntityDocument {
        let raw = format!(
            r#"{{"id":"Q219","labels":{{"en":{{"language":"en","value":"Bulgaria"}}}},
               "claims":{{"P85":[{{"mainsnak":{{"snaktype":"value","property":"P85",
               "datavalue":{{"type":"wikibase-entityid","value":{{"id":"{anthem}"}}}}}}}}]}}}}"#
        );
        parse_entity(raw.as_bytes()).unwrap()
    }

    #[test]
    fn anthem_replacement_is_one_change() {
        let parent = bulgaria("Q207843");
        let current = bulgaria("Q30588468");
        let deltas = diff_entities(Some(&parent), &current).unwrap();
        assert_eq!(deltas.len(), 1);
        let d = &deltas[0];
        assert_eq!(d.action(), DeltaAction::Change);
        assert_eq!(d.target(), &DeltaTarget::Statement(PropertyId::new(85).unwrap()));
        assert_eq!(
            d.old_value(),
            Some(&DeltaValue::TripleValue(StatementValue::EntityRef {
                id: "Q207843".parse().unwrap()
            }))
        );
    }

    #[test]
    fn identical_documents_produce_nothing() {
        let doc = bulgaria("Q207843");
        assert!(diff_entities(Some(&doc), &doc).unwrap().is_empty());
    }

    #[test]
    fn description_insert() {
        let parent = bulgaria("Q207843");
        let mut current = parent.clone();
        current.descriptions.insert(lang("de"), "Staat in Europa".into());
        let deltas = diff_entities(Some(&parent), &current).unwrap();
        assert_eq!(deltas.len(), 1);
        assert_eq!(deltas[0].action(), DeltaAction::Insert);
        assert_eq!(deltas[0].target(), &DeltaTarget::Description(lang("de")));
        let patched = apply_deltas(&parent, &deltas).unwrap();
        assert!(patched.same_content(&current));
    }

    #[test]
    fn mismatched_entities_are_rejected() {
        let a = bulgaria("Q1");
        let mut b = a.clone();
        b.id = ItemId::new(2).unwrap();
        assert!(matches!(
            diff_entities(Some(&a), &b),
            Err(DiffError::EntityMismatch { .. })
        ));
    }

    #[test]
    fn creation_inserts_everything() {
        let doc = bulgaria("Q207843");
        let deltas = diff_entities(None, &doc).unwrap();
        assert_eq!(deltas.len(), 2);
        assert!(deltas.iter().all(|d| d.action() == DeltaAction::Insert));
        assert_eq!(deltas[0].target().family(), TargetFamily::Label);
    }

    #[test]
    fn multiple_unmatched_values_split_into_removes_and_inserts() {
        let p = PropertyId::new(31).unwrap();
        let v = |s: &str| Statement::new(p, StatementValue::Text { value: s.into() });
        let mut parent = EntityDocument::new(ItemId::new(7).unwrap());
        parent.statements.insert(p, vec![v("a"), v("b"), v("c")]);
        let mut current = parent.clone();
        current.statements.insert(p, vec![v("c"), v("x"), v("y")]);
        let actions: Vec<_> = diff_entities(Some(&parent), &current)
            .unwrap()
            .iter()
            .map(|d| d.action())
            .collect();
        assert_eq!(
            actions,
            vec![DeltaAction::Remove, DeltaAction::Remove, DeltaAction::Insert, DeltaAction::Insert]
        );
    }

    #[test]
    fn empty_patch_is_identity() {
        let doc = bulgaria("Q207843");
        assert_eq!(apply_deltas(&doc, &[]).unwrap(), doc);
    }

    #[test]
    fn single_label_insert_on_empty_document() {
        let empty = EntityDocument::new(ItemId::new(219).unwrap());
        let delta = ContentDelta::insert_text(DeltaTarget::Label(lang("en")), "Bulgaria").unwrap();
        let doc = apply_deltas(&empty, &[delta]).unwrap();
        assert_eq!(doc.labels.len(), 1);
        assert_eq!(doc.labels[&lang("en")], "Bulgaria");
    }

    #[test]
    fn inconsistent_deltas_are_reported() {
        let doc = EntityDocument::new(ItemId::new(1).unwrap());
        let remove = ContentDelta::new(
            DeltaAction::Remove,
            DeltaTarget::Label(lang("en")),
            Some(DeltaValue::PlainText("x".into())),
            None,
        )
        .unwrap();
        assert!(matches!(apply_deltas(&doc, &[remove]), Err(DiffError::InconsistentDelta(_))));
        let insert = ContentDelta::insert_text(DeltaTarget::Alias(lang("en")), "a").unwrap();
        assert!(matches!(
            apply_deltas(&doc, &[insert.clone(), insert]),
            Err(DiffError::InconsistentDelta(_))
        ));
    }

    #[test]
    fn constructor_enforces_presence_rules() {
        let t = || Some(DeltaValue::PlainText("a".into()));
        let target = || DeltaTarget::Label(lang("en"));
        assert!(ContentDelta::new(DeltaAction::Insert, target(), t(), t()).is_err());
        assert!(ContentDelta::new(DeltaAction::Remove, target(), None, t()).is_err());
        assert!(ContentDelta::new(DeltaAction::Change, target(), t(), t()).is_err());
        let triple = Some(DeltaValue::TripleValue(StatementValue::NoValue));
        assert!(ContentDelta::new(DeltaAction::Insert, target(), None, triple).is_err());
    }

    #[test]
    fn shapes() {
        let ins = ContentDelta::insert_text(DeltaTarget::Label(lang("en")), "a").unwrap();
        let rem = ins.inverted();
        let chg = ContentDelta::new(
            DeltaAction::Change,
            DeltaTarget::Label(lang("en")),
            Some(DeltaValue::PlainText("a".into())),
            Some(DeltaValue::PlainText("b".into())),
        )
        .unwrap();
        assert_eq!(classify_revision_shape(&[ins.clone(), ins.clone()]).unwrap(), RevisionShape::InsertOnly);
        assert_eq!(classify_revision_shape(&[ins, rem.clone()]).unwrap(), RevisionShape::Mixed);
        assert_eq!(classify_revision_shape(&[chg]).unwrap(), RevisionShape::ChangeOnly);
        assert_eq!(classify_revision_shape(&[rem]).unwrap(), RevisionShape::RemoveOnly);
        assert!(matches!(classify_revision_shape(&[]), Err(DiffError::EmptyRevision)));
    }

    #[test]
    fn wire_format_uses_flat_fields() {
        let delta = ContentDelta::insert_statement(
            PropertyId::new(625).unwrap(),
            StatementValue::Coordinate {
                latitude: 42.7,
                longitude: 25.5,
            },
        )
        .unwrap();
        let json = serde_json::to_value(&delta).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "action": "insert", "target": "statement", "property": "P625",
                "new": {"type": "coordinate", "latitude": 42.7, "longitude": 25.5}
            })
        );
        let back: ContentDelta = serde_json::from_value(json).unwrap();
        assert_eq!(back, delta);
        let bad = serde_json::json!({"action": "insert", "target": "label", "new": "x"});
        assert!(serde_json::from_value::<ContentDelta>(bad).is_err());
    }

    fn sorted_keys(deltas: &[ContentDelta]) -> Vec<String> {
        let mut keys: Vec<String> = deltas
            .iter()
            .map(|d| serde_json::to_string(d).unwrap())
            .collect();
        keys.sort();
        keys
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn patch_round_trip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let parent = random_document(&mut rng);
            let current = random_edit(&mut rng, &parent);
            let deltas = diff_entities(Some(&parent), &current).unwrap();
            let patched = apply_deltas(&parent, &deltas).unwrap();
            prop_assert!(patched.same_content(&current));
        }

        #[test]
        fn self_diff_is_empty(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let doc = random_document(&mut rng);
            prop_assert!(diff_entities(Some(&doc), &doc).unwrap().is_empty());
        }

        #[test]
        fn swapping_sides_inverts_deltas(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let parent = random_document(&mut rng);
            let current = random_edit(&mut rng, &parent);
            let forward = diff_entities(Some(&parent), &current).unwrap();
            let backward = diff_entities(Some(&current), &parent).unwrap();
            let inverted: Vec<ContentDelta> = forward.iter().map(ContentDelta::inverted).collect();
            prop_assert_eq!(sorted_keys(&inverted), sorted_keys(&backward));
        }

        #[test]
        fn deltas_are_valid_and_deterministic(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let parent = random_document(&mut rng);
            let current = random_edit(&mut rng, &parent);
            let a = diff_entities(Some(&parent), &current).unwrap();
            let b = diff_entities(Some(&parent), &current).unwrap();
            prop_assert_eq!(&a, &b);
            for d in &a {
                let rebuilt = ContentDelta::new(d.action(), d.target().clone(), d.old_value().cloned(), d.new_value().cloned());
                prop_assert!(rebuilt.is_ok());
            }
        }

        #[test]
        fn serialization_round_trip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let doc = random_document(&mut rng);
            let again = parse_entity(&doc.to_json_bytes()).unwrap();
            prop_assert_eq!(doc, again);
        }
    }
}
