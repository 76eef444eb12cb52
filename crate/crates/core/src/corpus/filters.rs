use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::RevisionRecord;

pub const DEFAULT_UI_TAG: &str = "wikidata-ui";

/// Keeps records carrying the human user-interface tag.
pub fn filter_human_ui_edits<'a, I>(records: I, tag: &'a str) -> impl Iterator<Item = RevisionRecord> + 'a
where
    I: IntoIterator<Item = RevisionRecord>,
    I::IntoIter: 'a,
{
    records.into_iter().filter(move |r| r.tags.contains(tag))
}

fn is_self_revert(r: &RevisionRecord) -> bool {
    r.reverted
        && r.editor.editor_id.is_some()
        && r.reverting_editor.as_deref() == r.editor.editor_id.as_deref()
}

/// Drops revisions their own author reverted. Those are iterative editing,
/// not damage.
pub fn filter_self_reverts<I>(records: I) -> impl Iterator<Item = RevisionRecord>
where
    I: IntoIterator<Item = RevisionRecord>,
{
    records.into_iter().filter(|r| !is_self_revert(r))
}

struct UnionFind {
    parent: HashMap<u64, u64>,
}

impl UnionFind {
    fn find(&mut self, x: u64) -> u64 {
        let mut root = x;
        while let Some(&p) = self.parent.get(&root) {
            if p == root {
                break;
            }
            root = p;
        }
        let mut cur = x;
        while cur != root {
            let next = self.parent.insert(cur, root).unwrap_or(root);
            cur = next;
        }
        self.parent.entry(root).or_insert(root);
        root
    }

    fn union(&mut self, a: u64, b: u64) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra.max(rb), ra.min(rb));
        }
    }
}

/// Revision ids taking part in an edit war: any connected group of revert
/// links that contains two or more reverting revisions. The reverted
/// originals are members too.
pub fn edit_war_members(records: &[RevisionRecord]) -> HashSet<u64> {
    let mut uf = UnionFind { parent: HashMap::new() };
    for r in records {
        if let Some(target) = r.is_revert_of {
            uf.union(r.revision_id, target);
        }
    }
    let mut reverts_per_root: HashMap<u64, usize> = HashMap::new();
    for r in records.iter().filter(|r| r.is_revert_of.is_some()) {
        *reverts_per_root.entry(uf.find(r.revision_id)).or_default() += 1;
    }
    let mut members = HashSet::new();
    for r in records {
        if uf.parent.contains_key(&r.revision_id) {
            let root = uf.find(r.revision_id);
            if reverts_per_root.get(&root).copied().unwrap_or(0) >= 2 {
                members.insert(r.revision_id);
            }
        }
    }
    members
}

/// Removes every revision participating in an edit war, preserving order.
pub fn filter_edit_wars(records: Vec<RevisionRecord>) -> Vec<RevisionRecord> {
    let war = edit_war_members(&records);
    records.into_iter().filter(|r| !war.contains(&r.revision_id)).collect()
}

/// Counts from one pass of the quality filters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub after_ui_filter: usize,
    pub reverted_before: usize,
    pub self_reverts_removed: usize,
    pub edit_war_removed: usize,
    pub reverted_removed: usize,
    pub output: usize,
}

impl FilterReport {
    /// Share of UI-tagged revisions removed by the self-revert and edit-war filters.
    pub fn fraction_of_all_removed(&self) -> f64 {
        ratio(self.after_ui_filter - self.output, self.after_ui_filter)
    }

    /// Share of initially reverted revisions the two filters removed.
    pub fn fraction_of_reverted_removed(&self) -> f64 {
        ratio(self.reverted_removed, self.reverted_before)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// UI filter, then self-revert filter, then edit-war filter.
pub fn apply_quality_filters(records: Vec<RevisionRecord>, ui_tag: &str) -> (Vec<RevisionRecord>, FilterReport) {
    let mut report = FilterReport {
        input: records.len(),
        ..Default::default()
    };
    let ui: Vec<_> = filter_human_ui_edits(records, ui_tag).collect();
    report.after_ui_filter = ui.len();
    report.reverted_before = ui.iter().filter(|r| r.reverted).count();

    let no_self: Vec<_> = filter_self_reverts(ui).collect();
    report.self_reverts_removed = report.after_ui_filter - no_self.len();

    let out = filter_edit_wars(no_self);
    report.edit_war_removed = report.after_ui_filter - report.self_reverts_removed - out.len();
    report.output = out.len();
    report.reverted_removed = report.reverted_before - out.iter().filter(|r| r.reverted).count();
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EditorInfo;
    use chrono::{TimeZone, Utc};

    fn rec(id: u64, editor: &str) -> RevisionRecord {
        RevisionRecord {
            revision_id: id,
            entity_id: "Q1".parse().unwrap(),
            timestamp: Utc.timestamp_opt(1_600_000_000 + id as i64, 0).unwrap(),
            parent_revision_id: id.checked_sub(1).filter(|&p| p > 0),
            editor: EditorInfo::registered(editor, Utc.timestamp_opt(0, 0).unwrap(), 100),
            tags: ["wikidata-ui".to_string()].into(),
            deltas: vec![],
            reverted: false,
            reverting_editor: None,
            is_revert_of: None,
            entity_is_human: None,
        }
    }

    fn ids(records: &[RevisionRecord]) -> Vec<u64> {
        records.iter().map(|r| r.revision_id).collect()
    }

    #[test]
    fn ui_filter_keeps_tagged_in_order() {
        let mut records: Vec<_> = (1..=10).map(|i| rec(i, "a")).collect();
        for r in records.iter_mut().filter(|r| ![2, 5, 7, 9].contains(&r.revision_id)) {
            r.tags = ["OAuth bot".to_string()].into();
        }
        let kept: Vec<_> = filter_human_ui_edits(records, DEFAULT_UI_TAG).collect();
        assert_eq!(ids(&kept), vec![2, 5, 7, 9]);
    }

    #[test]
    fn self_revert_filter() {
        let mut own = rec(1, "alice");
        own.reverted = true;
        own.reverting_editor = Some("alice".into());
        let mut other = rec(2, "alice");
        other.reverted = true;
        other.reverting_editor = Some("bob".into());
        let plain = rec(3, "alice");
        let kept: Vec<_> = filter_self_reverts(vec![own, other, plain]).collect();
        assert_eq!(ids(&kept), vec![2, 3]);
    }

    #[test]
    fn three_revision_war_is_removed() {
        let mut a = rec(1, "A");
        a.reverted = true;
        a.reverting_editor = Some("B".into());
        let mut b = rec(2, "B");
        b.is_revert_of = Some(1);
        b.reverted = true;
        b.reverting_editor = Some("A".into());
        let mut c = rec(3, "A");
        c.is_revert_of = Some(2);
        let bystander = rec(4, "C");
        let out = filter_edit_wars(vec![a, b, c, bystander]);
        assert_eq!(ids(&out), vec![4]);
    }

    #[test]
    fn single_revert_is_not_a_war() {
        let mut a = rec(1, "A");
        a.reverted = true;
        let mut b = rec(2, "B");
        b.is_revert_of = Some(1);
        let out = filter_edit_wars(vec![a, b]);
        assert_eq!(ids(&out), vec![1, 2]);
    }

    #[test]
    fn war_through_missing_target_is_detected() {
        // Both reverts point at a revision outside the slice.
        let mut b = rec(2, "B");
        b.is_revert_of = Some(1);
        let mut c = rec(3, "C");
        c.is_revert_of = Some(1);
        assert!(filter_edit_wars(vec![b, c]).is_empty());
    }

    #[test]
    fn report_counts_both_fractions() {
        let mut own = rec(1, "alice");
        own.reverted = true;
        own.reverting_editor = Some("alice".into());
        let mut kept = rec(2, "x");
        kept.reverted = true;
        kept.reverting_editor = Some("y".into());
        let mut bot = rec(3, "bot");
        bot.tags.clear();
        let (out, report) = apply_quality_filters(vec![own, kept, bot, rec(4, "z")], DEFAULT_UI_TAG);
        assert_eq!(ids(&out), vec![2, 4]);
        assert_eq!(report.input, 4);
        assert_eq!(report.after_ui_filter, 3);
        assert_eq!(report.self_reverts_removed, 1);
        assert_eq!(report.edit_war_removed, 0);
        assert!((report.fraction_of_reverted_removed() - 0.5).abs() < 1e-12);
        assert!((report.fraction_of_all_removed() - 1.0 / 3.0).abs() < 1e-12);
    }
}
