//! Identity-revert detection over a single page history. Used to label
//! fixtures; real corpora carry revert labels as input.

use std::collections::HashMap;
use std::hash::Hash;

use super::RevisionRecord;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEntry<H> {
    pub revision_id: u64,
    pub editor_id: Option<String>,
    pub content_hash: H,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevertLink {
    pub reverting: u64,
    pub reverting_editor: Option<String>,
    /// Reverted revisions in history order.
    pub reverted: Vec<u64>,
}

/// A revision whose content hash equals that of an earlier, non-adjacent
/// revision reverts everything in between. `history` must be in revision order.
pub fn identity_reverts<H: Eq + Hash + Clone>(history: &[HistoryEntry<H>]) -> Vec<RevertLink> {
    let mut last_seen: HashMap<H, usize> = HashMap::new();
    let mut links = Vec::new();
    for (i, entry) in history.iter().enumerate() {
        if let Some(&j) = last_seen.get(&entry.content_hash) {
            if j + 1 < i {
                links.push(RevertLink {
                    reverting: entry.revision_id,
                    reverting_editor: entry.editor_id.clone(),
                    reverted: history[j + 1..i].iter().map(|e| e.revision_id).collect(),
                });
            }
        }
        last_seen.insert(entry.content_hash.clone(), i);
    }
    links
}

/// Writes revert labels onto `records`. The reverting revision points at the
/// most recent revision it undid.
pub fn apply_revert_links(records: &mut [RevisionRecord], links: &[RevertLink]) {
    let index: HashMap<u64, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.revision_id, i))
        .collect();
    for link in links {
        for id in &link.reverted {
            if let Some(&i) = index.get(id) {
                records[i].reverted = true;
                records[i].reverting_editor = link.reverting_editor.clone();
            }
        }
        if let (Some(&i), Some(&last)) = (index.get(&link.reverting), link.reverted.last()) {
            records[i].is_revert_of = Some(last);
        }
    }
}
