//! Random entity documents and edits covering every statement value variant.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::entity::{
    EntityDocument, Identifier, ItemId, LabelMap, LanguageCode, PropertyId, Statement,
    StatementValue,
};

const LANGS: &[&str] = &["en", "de", "fr", "es", "ru", "ja", "sv", "zh-hans", "nl", "bg"];
pub(crate) const WORDS: &[&str] = &[
    "river", "mountain", "capital", "village", "anthem", "painter", "novel", "bridge", "species",
    "Sofia", "Europe", "Balkan", "Ostrava", "Lisboa", "Tōkyō", "город", "Straße", "été", "lake",
    "museum", "football", "club", "album", "singer", "railway", "station",
];

pub const MAX_ITEM: u64 = 400;
pub const MAX_PROPERTY: u64 = 60;

pub(crate) fn lang<R: Rng>(rng: &mut R) -> LanguageCode {
    LanguageCode::new(*LANGS.choose(rng).expect("non-empty")).expect("valid code")
}

pub(crate) fn phrase<R: Rng>(rng: &mut R) -> String {
    let n = rng.random_range(1..=4);
    (0..n)
        .map(|_| *WORDS.choose(rng).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub(crate) fn item<R: Rng>(rng: &mut R) -> ItemId {
    ItemId::new(rng.random_range(1..=MAX_ITEM)).expect("non-zero")
}

pub(crate) fn property<R: Rng>(rng: &mut R) -> PropertyId {
    PropertyId::new(rng.random_range(1..=MAX_PROPERTY)).expect("non-zero")
}

/// Draws a value uniformly over the eight variants.
pub fn random_value<R: Rng>(rng: &mut R) -> StatementValue {
    match rng.random_range(0..8) {
        0 => StatementValue::EntityRef {
            id: if rng.random_bool(0.85) {
                Identifier::Item(item(rng))
            } else {
                Identifier::Property(property(rng))
            },
        },
        1 => StatementValue::Text { value: phrase(rng) },
        2 => StatementValue::MonolingualText {
            language: lang(rng),
            text: phrase(rng),
        },
        3 => {
            let whole: i64 = rng.random_range(-100_000..100_000);
            let amount = if rng.random_bool(0.5) {
                format!("{whole:+}")
            } else {
                format!("{whole:+}.{}", rng.random_range(1..1000))
            };
            StatementValue::Quantity {
                amount,
                unit: rng.random_bool(0.5).then(|| item(rng)),
            }
        }
        4 => StatementValue::TimePoint {
            time: format!(
                "+{:04}-{:02}-{:02}T00:00:00Z",
                rng.random_range(1..2030),
                rng.random_range(1..=12),
                rng.random_range(1..=28)
            ),
            precision: rng.random_range(0..=14),
        },
        5 => StatementValue::Coordinate {
            latitude: rng.random_range(-90.0..=90.0),
            longitude: rng.random_range(-180.0..=180.0),
        },
        6 => StatementValue::SomeValue,
        _ => StatementValue::NoValue,
    }
}

pub fn random_document<R: Rng>(rng: &mut R) -> EntityDocument {
    let mut doc = EntityDocument::new(item(rng));
    for _ in 0..rng.random_range(0..5) {
        doc.labels.insert(lang(rng), phrase(rng));
    }
    for _ in 0..rng.random_range(0..4) {
        doc.descriptions.insert(lang(rng), phrase(rng));
    }
    for _ in 0..rng.random_range(0..3) {
        let list = doc.aliases.entry(lang(rng)).or_default();
        for _ in 0..rng.random_range(1..4) {
            let alias = phrase(rng);
            if !list.contains(&alias) {
                list.push(alias);
            }
        }
    }
    for _ in 0..rng.random_range(0..6) {
        let p = property(rng);
        let list = doc.statements.entry(p).or_default();
        for _ in 0..rng.random_range(1..4) {
            let value = random_value(rng);
            if rng.random_bool(0.1) {
                list.push(Statement::new(p, value.clone()));
            }
            list.push(Statement::new(p, value));
        }
    }
    doc
}

/// Applies between zero and six random modifications to a copy of `parent`.
pub fn random_edit<R: Rng>(rng: &mut R, parent: &EntityDocument) -> EntityDocument {
    let mut doc = parent.clone();
    for _ in 0..rng.random_range(0..7) {
        match rng.random_range(0..9) {
            0 => {
                doc.labels.insert(lang(rng), phrase(rng));
            }
            1 => {
                let key = doc.labels.keys().next().cloned();
                if let Some(key) = key {
                    doc.labels.remove(&key);
                }
            }
            2 => {
                doc.descriptions.insert(lang(rng), phrase(rng));
            }
            3 => {
                let key = doc.descriptions.keys().last().cloned();
                if let Some(key) = key {
                    doc.descriptions.remove(&key);
                }
            }
            4 => {
                let alias = phrase(rng);
                let list = doc.aliases.entry(lang(rng)).or_default();
                if !list.contains(&alias) {
                    list.push(alias);
                }
            }
            5 => {
                let key = doc.aliases.keys().next().cloned();
                if let Some(key) = key {
                    let list = doc.aliases.get_mut(&key).expect("key exists");
                    list.remove(0);
                    if list.is_empty() {
                        doc.aliases.remove(&key);
                    }
                }
            }
            6 => {
                let p = property(rng);
                doc.statements
                    .entry(p)
                    .or_default()
                    .push(Statement::new(p, random_value(rng)));
            }
            7 => {
                let key = doc.statements.keys().next().copied();
                if let Some(key) = key {
                    let list = doc.statements.get_mut(&key).expect("key exists");
                    let idx = rng.random_range(0..list.len());
                    list[idx] = Statement::new(key, random_value(rng));
                }
            }
            _ => {
                let key = doc.statements.keys().last().copied();
                if let Some(key) = key {
                    let list = doc.statements.get_mut(&key).expect("key exists");
                    let idx = rng.random_range(0..list.len());
                    list.remove(idx);
                    if list.is_empty() {
                        doc.statements.remove(&key);
                    }
                }
            }
        }
    }
    doc.aliases.retain(|_, list| !list.is_empty());
    doc
}

/// Labels for roughly `coverage` of all generated identifiers.
pub fn random_label_map<R: Rng>(rng: &mut R, coverage: f64) -> LabelMap {
    let mut labels = LabelMap::new();
    for n in 1..=MAX_ITEM {
        if rng.random_bool(coverage) {
            labels.insert(ItemId::new(n).expect("non-zero"), phrase(rng));
        }
    }
    for n in 1..=MAX_PROPERTY {
        if rng.random_bool(coverage) {
            labels.insert(PropertyId::new(n).expect("non-zero"), phrase(rng));
        }
    }
    labels
}
