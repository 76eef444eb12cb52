use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, Months, NaiveDate, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, RevisionRecord};
use crate::entity::ItemId;

pub const DEFAULT_SPLIT_RATIO: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub lmc_train: Vec<RevisionRecord>,
    pub final_train: Vec<RevisionRecord>,
    pub holdout: Vec<RevisionRecord>,
    pub cutoff: DateTime<Utc>,
    pub ratio: f64,
}

impl DatasetSplit {
    /// Time-based validation slice for the final classifier: the last
    /// `months` calendar months of `final_train`.
    pub fn final_validation(&self, months: u32) -> (Vec<RevisionRecord>, Vec<RevisionRecord>) {
        match cutoff_last_months(&self.final_train, months) {
            Some(cut) => split_by_cutoff(self.final_train.clone(), cut),
            None => (Vec::new(), Vec::new()),
        }
    }
}

/// Start of the calendar month such that the last `months` months of data
/// (counting the month of the latest record) fall on or after it.
pub fn cutoff_last_months(records: &[RevisionRecord], months: u32) -> Option<DateTime<Utc>> {
    let latest = records.iter().map(|r| r.timestamp).max()?;
    let month_start = NaiveDate::from_ymd_opt(latest.year(), latest.month(), 1)?;
    let start = month_start.checked_sub_months(Months::new(months.saturating_sub(1)))?;
    Some(start.and_hms_opt(0, 0, 0)?.and_utc())
}

/// Records before `cutoff`, then records at or after it. Order is kept.
pub fn split_by_cutoff(
    records: Vec<RevisionRecord>,
    cutoff: DateTime<Utc>,
) -> (Vec<RevisionRecord>, Vec<RevisionRecord>) {
    records.into_iter().partition(|r| r.timestamp < cutoff)
}

/// Assigns whole entities to two partitions. Entities are shuffled with the
/// seed and added to the first partition until it holds `ratio` of the
/// records; the rest go to the second. Either side may come out empty.
pub fn assign_entities(
    records: Vec<RevisionRecord>,
    ratio: f64,
    seed: u64,
) -> (Vec<RevisionRecord>, Vec<RevisionRecord>) {
    let mut sizes: BTreeMap<ItemId, usize> = BTreeMap::new();
    for r in &records {
        *sizes.entry(r.entity_id).or_default() += 1;
    }
    let mut entities: Vec<(ItemId, usize)> = sizes.into_iter().collect();
    entities.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let target = ratio * records.len() as f64;
    let mut first_count = 0usize;
    let mut in_first: BTreeMap<ItemId, bool> = BTreeMap::new();
    for (entity, size) in entities {
        let take = (first_count as f64) < target;
        if take {
            first_count += size;
        }
        in_first.insert(entity, take);
    }
    records.into_iter().partition(|r| in_first[&r.entity_id])
}

/// Time-based holdout at `cutoff`, then an entity-disjoint split of the
/// remainder into LMC-train and final-classifier-train.
pub fn split_dataset(
    records: Vec<RevisionRecord>,
    cutoff: DateTime<Utc>,
    ratio: f64,
    seed: u64,
) -> Result<DatasetSplit, CorpusError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::InvalidSplitRatio(ratio));
    }
    let (train, holdout) = split_by_cutoff(records, cutoff);
    let (lmc_train, final_train) = assign_entities(train, ratio, seed);
    for (name, part) in [
        ("lmc_train", &lmc_train),
        ("final_train", &final_train),
        ("holdout", &holdout),
    ] {
        if part.is_empty() {
            return Err(CorpusError::EmptyPartition(name));
        }
    }
    Ok(DatasetSplit {
        lmc_train,
        final_train,
        holdout,
        cutoff,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EditorInfo;
    use chrono::TimeZone;
    use std::collections::HashSet;

    fn rec(id: u64, entity: u64, ts: DateTime<Utc>) -> RevisionRecord {
        RevisionRecord {
            revision_id: id,
            entity_id: ItemId::new(entity).unwrap(),
            timestamp: ts,
            parent_revision_id: None,
            editor: EditorInfo::anonymous(),
            tags: Default::default(),
            deltas: vec![],
            reverted: false,
            reverting_editor: None,
            is_revert_of: None,
            entity_is_human: None,
        }
    }

    fn monthly_corpus() -> Vec<RevisionRecord> {
        // 24 months from 2021-09 to 2023-08, ten records per month.
        let mut out = Vec::new();
        let start = NaiveDate::from_ymd_opt(2021, 9, 1).unwrap();
        for m in 0..24u32 {
            let day = start.checked_add_months(Months::new(m)).unwrap();
            for k in 0..10u64 {
                let ts = day.and_hms_opt(k as u32, 0, 0).unwrap().and_utc() + chrono::Duration::days(k as i64 * 2);
                out.push(rec(m as u64 * 10 + k + 1, k % 7 + 1, ts));
            }
        }
        out
    }

    #[test]
    fn last_three_months_are_holdout() {
        let corpus = monthly_corpus();
        let cutoff = cutoff_last_months(&corpus, 3).unwrap();
        assert_eq!(cutoff, Utc.with_ymd_and_hms(2023, 6, 1, 0, 0, 0).unwrap());
        let split = split_dataset(corpus, cutoff, 0.8, 1).unwrap();
        assert_eq!(split.holdout.len(), 30);
        let months: HashSet<u32> = split.holdout.iter().map(|r| r.timestamp.month()).collect();
        assert_eq!(months, HashSet::from([6, 7, 8]));
        assert!(split.lmc_train.iter().chain(&split.final_train).all(|r| r.timestamp < cutoff));
    }

    #[test]
    fn single_entity_goes_wholly_to_one_side() {
        let ts = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();
        let records: Vec<_> = (1..=20).map(|i| rec(i, 42, ts)).collect();
        let (a, b) = assign_entities(records.clone(), 0.8, 5);
        assert!(a.len() == 20 && b.is_empty() || b.len() == 20 && a.is_empty());
        let err = split_dataset(records, ts + chrono::Duration::days(1), 0.8, 5).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyPartition(_)));
    }

    #[test]
    fn ratio_is_validated() {
        let ts = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();
        for bad in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(
                split_dataset(vec![rec(1, 1, ts)], ts, bad, 0),
                Err(CorpusError::InvalidSplitRatio(_))
            ));
        }
    }

    #[test]
    fn final_validation_is_time_based() {
        let corpus = monthly_corpus();
        let cutoff = cutoff_last_months(&corpus, 3).unwrap();
        let split = split_dataset(corpus, cutoff, 0.8, 9).unwrap();
        let (train, valid) = split.final_validation(3);
        assert_eq!(train.len() + valid.len(), split.final_train.len());
        let vcut = Utc.with_ymd_and_hms(2023, 3, 1, 0, 0, 0).unwrap();
        assert!(valid.iter().all(|r| r.timestamp >= vcut && r.timestamp < cutoff));
        assert!(train.iter().all(|r| r.timestamp < vcut));
    }
}
