//! Labeled revision corpus with injected vandalism.
//!
//! Given the label, the editor and the edit content are drawn independently:
//! vandal revisions favour anonymous and newly registered editors, and their
//! changes favour a small vocabulary of abusive tokens and junk statement
//! values (for example replacing an anthem). Benign revisions occasionally
//! borrow the same tokens. The corpus also carries noise the quality filters
//! are meant to strip: bot-tagged edits, self-reverts and three-revision edit
//! wars.

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::documents::{item, lang, phrase, property, random_document, random_value, WORDS};
use crate::corpus::{EditorInfo, RevisionRecord, DEFAULT_UI_TAG};
use crate::diff::diff_entities;
use crate::entity::{EntityDocument, ItemId, LabelMap, PropertyId, Statement, StatementValue};

pub const VANDAL_WORDS: &[&str] = &[
    "poop", "idiot", "lol", "hacked", "sucks", "stupid", "fake", "haha", "loser", "boring",
];
const JUNK_LABELS: &[&str] = &[
    "Despacito", "meme", "nonsense", "my friend", "banana phone", "lolcat", "troll face", "random guy",
];
/// Junk items live above the range used for ordinary values.
const JUNK_BASE: u64 = 1000;
pub const ANTHEM: u64 = 85;
const INSTANCE_OF: u64 = 31;
const HUMAN: u64 = 5;
const BOT_TAG: &str = "OAuth bot";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_revisions: usize,
    pub n_entities: usize,
    pub n_experienced_editors: usize,
    pub vandalism_rate: f64,
    pub start: DateTime<Utc>,
    pub days: i64,
    /// Share of identifiers that get a label.
    pub label_coverage: f64,
    pub human_entity_rate: f64,
    pub anonymous_given_vandal: f64,
    pub anonymous_given_benign: f64,
    /// Among registered editors.
    pub newcomer_given_vandal: f64,
    pub newcomer_given_benign: f64,
    /// Chance a vandal change uses abusive content.
    pub vandal_content_rate: f64,
    /// Chance a benign change does.
    pub benign_content_rate: f64,
    pub bot_rate: f64,
    pub self_revert_rate: f64,
    pub n_edit_wars: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_revisions: 20_000,
            n_entities: 800,
            n_experienced_editors: 300,
            vandalism_rate: 0.12,
            start: Utc.with_ymd_and_hms(2021, 9, 1, 0, 0, 0).unwrap(),
            days: 730,
            label_coverage: 0.91,
            human_entity_rate: 0.34,
            anonymous_given_vandal: 0.55,
            anonymous_given_benign: 0.25,
            newcomer_given_vandal: 0.6,
            newcomer_given_benign: 0.15,
            vandal_content_rate: 0.6,
            benign_content_rate: 0.05,
            bot_rate: 0.05,
            self_revert_rate: 0.02,
            n_edit_wars: 30,
            seed: 0,
        }
    }
}

/// One generated revision with the documents it was diffed from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRevision {
    pub record: RevisionRecord,
    pub parent: EntityDocument,
    pub current: EntityDocument,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub revisions: Vec<SyntheticRevision>,
    pub labels: LabelMap,
}

impl SyntheticCorpus {
    pub fn records(&self) -> Vec<RevisionRecord> {
        self.revisions.iter().map(|r| r.record.clone()).collect()
    }
}

fn junk_item(rng: &mut ChaCha8Rng) -> ItemId {
    ItemId::new(JUNK_BASE + rng.random_range(1..=JUNK_LABELS.len() as u64)).expect("non-zero")
}

fn vandal_phrase(rng: &mut ChaCha8Rng) -> String {
    let mut words: Vec<&str> = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        words.push(VANDAL_WORDS.choose(rng).expect("non-empty"));
    }
    if rng.random_bool(0.5) {
        words.insert(rng.random_range(0..=words.len()), WORDS.choose(rng).expect("non-empty"));
    }
    words.join(" ")
}

fn text(rng: &mut ChaCha8Rng, abusive: bool) -> String {
    if abusive {
        vandal_phrase(rng)
    } else {
        phrase(rng)
    }
}

fn labels(rng: &mut ChaCha8Rng, coverage: f64) -> LabelMap {
    let mut map = super::documents::random_label_map(rng, coverage);
    for (k, name) in JUNK_LABELS.iter().enumerate() {
        map.insert(ItemId::new(JUNK_BASE + k as u64 + 1).expect("non-zero"), *name);
    }
    map.insert(PropertyId::new(ANTHEM).expect("non-zero"), "anthem");
    map.insert(PropertyId::new(INSTANCE_OF).expect("non-zero"), "instance of");
    map.insert(ItemId::new(HUMAN).expect("non-zero"), "human");
    map
}

/// One content change; `abusive` selects the vandal variant.
fn mutate(rng: &mut ChaCha8Rng, doc: &mut EntityDocument, abusive: bool) {
    let anthem = PropertyId::new(ANTHEM).expect("non-zero");
    match rng.random_range(0..10) {
        0..=2 => {
            doc.labels.insert(lang(rng), text(rng, abusive));
        }
        3..=4 => {
            doc.descriptions.insert(lang(rng), text(rng, abusive));
        }
        5 => {
            let alias = text(rng, abusive);
            let list = doc.aliases.entry(lang(rng)).or_default();
            if !list.contains(&alias) {
                list.push(alias);
            }
        }
        6 if abusive => {
            doc.statements
                .insert(anthem, vec![Statement::new(anthem, StatementValue::EntityRef { id: junk_item(rng).into() })]);
        }
        6 => {
            doc.statements
                .insert(anthem, vec![Statement::new(anthem, StatementValue::EntityRef { id: item(rng).into() })]);
        }
        7 if abusive => {
            // Blank out a statement.
            let key = doc.statements.keys().next().copied();
            match key {
                Some(key) => {
                    doc.statements.remove(&key);
                }
                None => {
                    doc.descriptions.insert(lang(rng), vandal_phrase(rng));
                }
            }
        }
        _ => {
            let p = property(rng);
            let value = if abusive {
                if rng.random_bool(0.5) {
                    StatementValue::EntityRef { id: junk_item(rng).into() }
                } else {
                    StatementValue::Text { value: vandal_phrase(rng) }
                }
            } else {
                random_value(rng)
            };
            let list = doc.statements.entry(p).or_default();
            if list.is_empty() || rng.random_bool(0.5) {
                list.push(Statement::new(p, value));
            } else {
                let i = rng.random_range(0..list.len());
                list[i] = Statement::new(p, value);
            }
        }
    }
}

struct EditorPool {
    experienced: Vec<EditorInfo>,
    newcomers: usize,
}

impl EditorPool {
    fn new(rng: &mut ChaCha8Rng, n: usize, start: DateTime<Utc>) -> Self {
        let experienced = (0..n)
            .map(|k| {
                let reg = start - Duration::days(rng.random_range(365..365 * 8));
                let edits = 10f64.powf(rng.random_range(2.0..4.7)) as u64;
                EditorInfo::registered(format!("User{k}"), reg, edits)
            })
            .collect();
        Self { experienced, newcomers: 0 }
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng, at: DateTime<Utc>, anon: f64, newcomer: f64) -> EditorInfo {
        if rng.random_bool(anon) {
            return EditorInfo::anonymous();
        }
        if rng.random_bool(newcomer) {
            self.newcomers += 1;
            let reg = at - Duration::seconds(rng.random_range(60..25 * 86_400));
            return EditorInfo::registered(format!("Newbie{}", self.newcomers), reg, rng.random_range(0..40));
        }
        self.experienced.choose(rng).expect("non-empty pool").clone()
    }
}

pub fn generate_corpus(config: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let label_map = labels(&mut rng, config.label_coverage);

    let n_entities = config.n_entities.max(1);
    let mut docs: Vec<EntityDocument> = (0..n_entities)
        .map(|k| {
            let mut doc = random_document(&mut rng);
            doc.id = ItemId::new(10_000 + k as u64).expect("non-zero");
            if doc.labels.is_empty() {
                doc.labels.insert(lang(&mut rng), phrase(&mut rng));
            }
            if rng.random_bool(config.human_entity_rate) {
                let p31 = PropertyId::new(INSTANCE_OF).expect("non-zero");
                doc.statements.insert(
                    p31,
                    vec![Statement::new(p31, StatementValue::EntityRef { id: ItemId::new(HUMAN).expect("non-zero").into() })],
                );
            }
            doc
        })
        .collect();
    let mut last_rev: Vec<u64> = vec![0; n_entities];

    let span = config.days.max(1) * 86_400;
    let mut times: Vec<i64> = (0..config.n_revisions).map(|_| rng.random_range(0..span)).collect();
    times.sort_unstable();
    let mut editors = EditorPool::new(&mut rng, config.n_experienced_editors.max(1), config.start);
    let patrollers: Vec<String> = (0..20).map(|k| format!("Patroller{k}")).collect();

    // Edit wars occupy three consecutive revision slots each, spread over the timeline.
    let war_every = (config.n_revisions / (config.n_edit_wars + 1)).max(4);
    let mut next_war = 0;
    let mut revisions: Vec<SyntheticRevision> = Vec::with_capacity(config.n_revisions);
    let mut i = 0;
    let mut next_id = 1_000_000u64;
    while i < config.n_revisions {
        let at = config.start + Duration::seconds(times[i]);
        let e = rng.random_range(0..n_entities);
        let war = next_war < config.n_edit_wars && i >= (next_war + 1) * war_every && i + 3 <= config.n_revisions;
        if war {
            next_war += 1;
            let pool = &editors.experienced;
            let ai = rng.random_range(0..pool.len());
            let bi = (ai + rng.random_range(1..pool.len().max(2))) % pool.len();
            let (a, b) = (pool[ai].clone(), pool[bi].clone());
            let base = docs[e].clone();
            let mut edited = base.clone();
            while edited.same_content(&base) {
                mutate(&mut rng, &mut edited, false);
            }
            // A edits, B reverts A, A reverts B's revert.
            let steps = [
                (a.clone(), base.clone(), edited.clone(), b.editor_id.clone()),
                (b, edited.clone(), base.clone(), a.editor_id.clone()),
                (a, base, edited, None),
            ];
            let mut prev_id = None;
            for (k, (editor, parent, current, reverting_editor)) in steps.into_iter().enumerate() {
                let id = next_id;
                next_id += 1;
                let deltas = diff_entities(Some(&parent), &current).expect("same entity");
                revisions.push(SyntheticRevision {
                    record: RevisionRecord {
                        revision_id: id,
                        entity_id: parent.id,
                        timestamp: config.start + Duration::seconds(times[i + k]),
                        parent_revision_id: (last_rev[e] > 0).then_some(last_rev[e]),
                        editor,
                        tags: [DEFAULT_UI_TAG.to_owned()].into(),
                        deltas,
                        reverted: reverting_editor.is_some(),
                        reverting_editor,
                        is_revert_of: prev_id,
                        entity_is_human: Some(current.is_human()),
                    },
                    parent,
                    current: current.clone(),
                });
                prev_id = Some(id);
                last_rev[e] = id;
                docs[e] = current;
            }
            i += 3;
            continue;
        }

        let vandal = rng.random_bool(config.vandalism_rate);
        let (anon, newcomer) = if vandal {
            (config.anonymous_given_vandal, config.newcomer_given_vandal)
        } else {
            (config.anonymous_given_benign, config.newcomer_given_benign)
        };
        let editor = editors.draw(&mut rng, at, anon, newcomer);
        let content_rate = if vandal {
            config.vandal_content_rate
        } else {
            config.benign_content_rate
        };
        let parent = docs[e].clone();
        let mut current = parent.clone();
        let n_changes = if rng.random_bool(0.25) { rng.random_range(2..=3) } else { 1 };
        for _ in 0..n_changes {
            let abusive = rng.random_bool(content_rate);
            mutate(&mut rng, &mut current, abusive);
        }
        let mut deltas = diff_entities(Some(&parent), &current).expect("same entity");
        if deltas.is_empty() {
            current.descriptions.insert(lang(&mut rng), format!("{} {}", phrase(&mut rng), i));
            deltas = diff_entities(Some(&parent), &current).expect("same entity");
        }

        let bot = rng.random_bool(config.bot_rate);
        let self_revert = !vandal && !editor.is_anonymous && rng.random_bool(config.self_revert_rate);
        let mut tags: BTreeSet<String> = BTreeSet::new();
        tags.insert(if bot { BOT_TAG } else { DEFAULT_UI_TAG }.to_owned());
        let reverting_editor = if self_revert {
            editor.editor_id.clone()
        } else if vandal {
            Some(patrollers.choose(&mut rng).expect("non-empty").clone())
        } else {
            None
        };
        let id = next_id;
        next_id += 1;
        revisions.push(SyntheticRevision {
            record: RevisionRecord {
                revision_id: id,
                entity_id: parent.id,
                timestamp: at,
                parent_revision_id: (last_rev[e] > 0).then_some(last_rev[e]),
                editor,
                tags,
                deltas,
                reverted: vandal || self_revert,
                reverting_editor,
                is_revert_of: None,
                entity_is_human: Some(current.is_human()),
            },
            parent,
            current: current.clone(),
        });
        last_rev[e] = id;
        // Reverted content does not survive; later edits start from the parent.
        if !(vandal || self_revert) {
            docs[e] = current;
        }
        i += 1;
    }
    SyntheticCorpus {
        revisions,
        labels: label_map,
    }
}
