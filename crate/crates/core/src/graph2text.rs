//! Graph2Text: every content delta, textual or structured, becomes one
//! prefixed string that a single text classifier can score.
//!
//! Template (versioned as [`TEMPLATE_VERSION`]; models record it and refuse
//! to load under a different one):
//!
//! ```text
//! <action> <family>: <body>
//! insert description: en: a country in Europe
//! change label: de: old: Bulgarien new: Bulgaria
//! change statement: anthem old: Mila Rodino new: Despacito
//! ```
//!
//! Statement bodies never contain raw `[PQ]<digits>` identifiers: property and
//! entity references go through the label map, and identifier-looking tokens in
//! free-text values are substituted the same way. Missing labels render as
//! `unknown`.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::diff::{ContentDelta, DeltaAction, DeltaTarget, DeltaValue, TargetFamily};
use crate::entity::{resolve_label, resolve_label_str, Identifier, ItemId, LabelMap, LanguageCode, StatementValue};

pub const TEMPLATE_VERSION: &str = "g2t-1";
pub const DEFAULT_MAX_CHARS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextualizedChange {
    pub action: DeltaAction,
    pub family: TargetFamily,
    pub prefix: String,
    pub body: String,
    pub full_text: String,
    pub source_target: DeltaTarget,
    pub language: Option<LanguageCode>,
}

/// The colon-terminated prefix for an (action, family) pair, e.g. `remove statement:`.
pub fn prefix(action: DeltaAction, family: TargetFamily) -> String {
    format!("{} {}:", action.as_str(), family.as_str())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph2Text {
    /// Prepend the subject entity's label to statement bodies.
    pub include_subject_label: bool,
    /// Upper bound on `full_text` length, in characters.
    pub max_chars: usize,
}

impl Default for Graph2Text {
    fn default() -> Self {
        Self {
            include_subject_label: false,
            max_chars: DEFAULT_MAX_CHARS,
        }
    }
}

fn raw_id_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"\b[PQ][0-9]+\b").expect("valid pattern"))
}

fn substitute_ids(text: &str, labels: &LabelMap) -> String {
    raw_id_pattern()
        .replace_all(text, |caps: &regex::Captures<'_>| resolve_label_str(&caps[0], labels).to_owned())
        .into_owned()
}

fn render_value(value: &StatementValue, labels: &LabelMap) -> String {
    match value {
        StatementValue::EntityRef { id } => resolve_label(id, labels).to_owned(),
        StatementValue::Text { value } => substitute_ids(value, labels),
        StatementValue::MonolingualText { language, text } => {
            format!("{language}: {}", substitute_ids(text, labels))
        }
        StatementValue::Quantity { amount, unit } => {
            let amount = amount.strip_prefix('+').unwrap_or(amount);
            match unit {
                Some(unit) => format!("{amount} {}", resolve_label(&Identifier::Item(*unit), labels)),
                None => amount.to_owned(),
            }
        }
        StatementValue::TimePoint { time, .. } => time.clone(),
        StatementValue::Coordinate {
            latitude,
            longitude,
        } => format!("lat {latitude} lon {longitude}"),
        StatementValue::SomeValue => "somevalue".to_owned(),
        StatementValue::NoValue => "novalue".to_owned(),
    }
}

fn plain(value: Option<&DeltaValue>) -> &str {
    match value {
        Some(DeltaValue::PlainText(t)) => t,
        _ => "",
    }
}

fn triple(value: Option<&DeltaValue>) -> Option<&StatementValue> {
    match value {
        Some(DeltaValue::TripleValue(v)) => Some(v),
        _ => None,
    }
}

fn sides(action: DeltaAction, old: String, new: String) -> String {
    match action {
        DeltaAction::Insert => new,
        DeltaAction::Remove => old,
        DeltaAction::Change => format!("old: {old} new: {new}"),
    }
}

impl Graph2Text {
    pub fn textualize(
        &self,
        delta: &ContentDelta,
        labels: &LabelMap,
        subject: Option<ItemId>,
    ) -> TextualizedChange {
        let action = delta.action();
        let target = delta.target();
        let body = match target {
            DeltaTarget::Statement(property) => {
                let render = |v: Option<&DeltaValue>| {
                    triple(v).map(|v| render_value(v, labels)).unwrap_or_default()
                };
                let values = sides(action, render(delta.old_value()), render(delta.new_value()));
                let property_label = resolve_label(&Identifier::Property(*property), labels);
                match subject.filter(|_| self.include_subject_label) {
                    Some(subject) => format!(
                        "{} {property_label} {values}",
                        resolve_label(&Identifier::Item(subject), labels)
                    ),
                    None => format!("{property_label} {values}"),
                }
            }
            other => {
                let lang = other.language().expect("textual targets carry a language");
                let values = sides(
                    action,
                    plain(delta.old_value()).to_owned(),
                    plain(delta.new_value()).to_owned(),
                );
                format!("{lang}: {values}")
            }
        };
        self.assemble(action, target.clone(), body)
    }

    /// Builds a change from an already rendered body, enforcing the length cap.
    pub fn assemble(&self, action: DeltaAction, target: DeltaTarget, body: String) -> TextualizedChange {
        let family = target.family();
        let prefix = prefix(action, family);
        let budget = self.max_chars.saturating_sub(prefix.chars().count() + 1);
        let body = match body.char_indices().nth(budget) {
            Some((cut, _)) => body[..cut].to_owned(),
            None => body,
        };
        let full_text = if body.is_empty() {
            prefix.clone()
        } else {
            format!("{prefix} {body}")
        };
        TextualizedChange {
            action,
            family,
            prefix,
            body,
            full_text,
            language: target.language().cloned(),
            source_target: target,
        }
    }

    pub fn textualize_revision(
        &self,
        deltas: &[ContentDelta],
        labels: &LabelMap,
        subject: Option<ItemId>,
    ) -> Vec<TextualizedChange> {
        deltas
            .iter()
            .map(|d| self.textualize(d, labels, subject))
            .collect()
    }
}

/// [`Graph2Text::textualize`] with the default configuration.
pub fn textualize(delta: &ContentDelta, labels: &LabelMap) -> TextualizedChange {
    Graph2Text::default().textualize(delta, labels, None)
}

pub fn textualize_revision(deltas: &[ContentDelta], labels: &LabelMap) -> Vec<TextualizedChange> {
    Graph2Text::default().textualize_revision(deltas, labels, None)
}

/// True when `text` still contains a raw `[PQ]<digits>` identifier.
pub fn contains_raw_identifier(text: &str) -> bool {
    raw_id_pattern().is_match(text)
}

/// Every identifier whose label a textualization of `deltas` may look up.
/// A label map restricted to these ids textualizes identically.
pub fn referenced_identifiers(deltas: &[ContentDelta], subject: Option<ItemId>) -> BTreeSet<Identifier> {
    let mut out = BTreeSet::new();
    out.extend(subject.map(Identifier::from));
    let scan = |text: &str, out: &mut BTreeSet<Identifier>| {
        out.extend(raw_id_pattern().find_iter(text).filter_map(|m| m.as_str().parse::<Identifier>().ok()));
    };
    for delta in deltas {
        out.extend(delta.target().property().map(Identifier::from));
        for value in [delta.old_value(), delta.new_value()].into_iter().flatten() {
            match value {
                DeltaValue::PlainText(t) => scan(t, &mut out),
                DeltaValue::TripleValue(v) => match v {
                    StatementValue::EntityRef { id } => {
                        out.insert(*id);
                    }
                    StatementValue::Text { value } => scan(value, &mut out),
                    StatementValue::MonolingualText { text, .. } => scan(text, &mut out),
                    StatementValue::Quantity { unit: Some(u), .. } => {
                        out.insert(Identifier::from(*u));
                    }
                    _ => {}
                },
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::diff_entities;
    use crate::entity::PropertyId;
    use crate::synthetic::documents::{random_document, random_edit, random_label_map};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn lang(code: &str) -> LanguageCode {
        LanguageCode::new(code).unwrap()
    }

    fn anthem_labels() -> LabelMap {
        let mut labels = LabelMap::new();
        labels.insert("P85".parse::<Identifier>().unwrap(), "anthem");
        labels.insert("Q207843".parse::<Identifier>().unwrap(), "Mila Rodino");
        labels.insert("Q30588468".parse::<Identifier>().unwrap(), "Despacito");
        labels
    }

    #[test]
    fn anthem_change() {
        let delta = ContentDelta::new(
            DeltaAction::Change,
            DeltaTarget::Statement(PropertyId::new(85).unwrap()),
            Some(DeltaValue::TripleValue(StatementValue::EntityRef {
                id: "Q207843".parse().unwrap(),
            })),
            Some(DeltaValue::TripleValue(StatementValue::EntityRef {
                id: "Q30588468".parse().unwrap(),
            })),
        )
        .unwrap();
        let change = textualize(&delta, &anthem_labels());
        assert_eq!(change.full_text, "change statement: anthem old: Mila Rodino new: Despacito");
        assert_eq!(change.prefix, "change statement:");
        assert_eq!(change.language, None);
    }

    #[test]
    fn description_insert() {
        let delta =
            ContentDelta::insert_text(DeltaTarget::Description(lang("en")), "a country in Europe").unwrap();
        let change = textualize(&delta, &LabelMap::new());
        assert_eq!(change.full_text, "insert description: en: a country in Europe");
        assert_eq!(change.language, Some(lang("en")));
    }

    #[test]
    fn textual_change_shows_both_sides() {
        let delta = ContentDelta::new(
            DeltaAction::Change,
            DeltaTarget::Label(lang("de")),
            Some(DeltaValue::PlainText("Bulgarien".into())),
            Some(DeltaValue::PlainText("Despacito".into())),
        )
        .unwrap();
        assert_eq!(
            textualize(&delta, &LabelMap::new()).full_text,
            "change label: de: old: Bulgarien new: Despacito"
        );
    }

    #[test]
    fn missing_labels_become_unknown() {
        let delta = ContentDelta::insert_statement(
            PropertyId::new(999_999).unwrap(),
            StatementValue::EntityRef {
                id: "Q888888888".parse().unwrap(),
            },
        )
        .unwrap();
        let change = textualize(&delta, &LabelMap::new());
        assert_eq!(change.body.matches("unknown").count(), 2);
        assert!(!contains_raw_identifier(&change.full_text));
    }

    #[test]
    fn value_renderings() {
        let mut labels = LabelMap::new();
        labels.insert("Q11573".parse::<Identifier>().unwrap(), "metre");
        labels.insert("Q42".parse::<Identifier>().unwrap(), "Douglas Adams");
        let r = |v: StatementValue| render_value(&v, &labels);
        assert_eq!(
            r(StatementValue::Quantity { amount: "+8848.86".into(), unit: Some(ItemId::new(11573).unwrap()) }),
            "8848.86 metre"
        );
        assert_eq!(r(StatementValue::Quantity { amount: "-3".into(), unit: None }), "-3");
        assert_eq!(
            r(StatementValue::Coordinate { latitude: 42.7, longitude: 25.5 }),
            "lat 42.7 lon 25.5"
        );
        assert_eq!(
            r(StatementValue::TimePoint { time: "+1879-03-14T00:00:00Z".into(), precision: 11 }),
            "+1879-03-14T00:00:00Z"
        );
        assert_eq!(r(StatementValue::SomeValue), "somevalue");
        assert_eq!(r(StatementValue::NoValue), "novalue");
        assert_eq!(r(StatementValue::Text { value: "see Q42 and P7".into() }), "see Douglas Adams and unknown");
        assert_eq!(
            r(StatementValue::MonolingualText { language: lang("bg"), text: "България".into() }),
            "bg: България"
        );
    }

    #[test]
    fn subject_label_is_opt_in() {
        let mut labels = anthem_labels();
        labels.insert("Q219".parse::<Identifier>().unwrap(), "Bulgaria");
        let delta = ContentDelta::insert_statement(
            PropertyId::new(85).unwrap(),
            StatementValue::EntityRef { id: "Q30588468".parse().unwrap() },
        )
        .unwrap();
        let subject = Some(ItemId::new(219).unwrap());
        let off = Graph2Text::default().textualize(&delta, &labels, subject);
        assert_eq!(off.body, "anthem Despacito");
        let on = Graph2Text { include_subject_label: true, ..Default::default() }
            .textualize(&delta, &labels, subject);
        assert_eq!(on.body, "Bulgaria anthem Despacito");
    }

    #[test]
    fn long_bodies_are_truncated() {
        let delta = ContentDelta::insert_text(DeltaTarget::Description(lang("en")), "ж".repeat(2000)).unwrap();
        let change = textualize(&delta, &LabelMap::new());
        assert_eq!(change.full_text.chars().count(), DEFAULT_MAX_CHARS);
        assert_eq!(change.full_text, format!("{} {}", change.prefix, change.body));
    }

    #[test]
    fn prefixes_are_injective() {
        let mut seen = HashSet::new();
        for action in DeltaAction::ALL {
            for family in TargetFamily::ALL {
                assert!(seen.insert(prefix(action, family)));
            }
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn revision_is_mapped_in_order() {
        assert!(textualize_revision(&[], &LabelMap::new()).is_empty());
        let d1 = ContentDelta::insert_text(DeltaTarget::Description(lang("en")), "a country").unwrap();
        let d2 = ContentDelta::insert_statement(
            PropertyId::new(85).unwrap(),
            StatementValue::EntityRef { id: "Q30588468".parse().unwrap() },
        )
        .unwrap();
        let labels = anthem_labels();
        let out = textualize_revision(&[d1.clone(), d2.clone()], &labels);
        assert_eq!(out, vec![textualize(&d1, &labels), textualize(&d2, &labels)]);
        assert_ne!(out[0].prefix, out[1].prefix);
    }

    #[test]
    fn target_serde() {
        let t = DeltaTarget::Alias(lang("zh-hans"));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, "\"alias(zh-hans)\"");
        assert_eq!(serde_json::from_str::<DeltaTarget>(&json).unwrap(), t);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn generated_deltas_textualize_cleanly(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels = random_label_map(&mut rng, 0.9);
            let parent = random_document(&mut rng);
            let current = random_edit(&mut rng, &parent);
            for delta in diff_entities(Some(&parent), &current).unwrap() {
                let change = textualize(&delta, &labels);
                let expected_prefix = prefix(delta.action(), delta.target().family());
                prop_assert!(change.full_text.starts_with(&expected_prefix));
                prop_assert!(change.full_text.chars().count() <= DEFAULT_MAX_CHARS);
                if delta.target().family() == TargetFamily::Statement {
                    prop_assert!(!contains_raw_identifier(&change.body), "{}", change.body);
                }
                prop_assert_eq!(&change, &textualize(&delta, &labels));
            }
        }

        #[test]
        fn restricted_label_map_is_equivalent(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels = random_label_map(&mut rng, 0.9);
            let parent = random_document(&mut rng);
            let current = random_edit(&mut rng, &parent);
            let deltas = diff_entities(Some(&parent), &current).unwrap();
            let g2t = Graph2Text { include_subject_label: true, ..Default::default() };
            let wanted = referenced_identifiers(&deltas, Some(current.id));
            let restricted: LabelMap = labels
                .iter()
                .filter(|(id, _)| wanted.contains(*id))
                .map(|(id, l)| (*id, l.to_owned()))
                .collect();
            prop_assert_eq!(
                g2t.textualize_revision(&deltas, &labels, Some(current.id)),
                g2t.textualize_revision(&deltas, &restricted, Some(current.id))
            );
        }
    }
}
