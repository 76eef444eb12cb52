use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, RevisionRecord};

/// Indices of `k` items drawn without replacement from `0..n`, in ascending order.
fn sample_sorted(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut picked = sample(rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

/// Keeps every reverted record and at most `ratio` unreverted records per
/// reverted one, sampled uniformly without replacement. Input order is kept.
pub fn balance_negatives(
    records: Vec<RevisionRecord>,
    ratio: u32,
    seed: u64,
) -> Result<Vec<RevisionRecord>, CorpusError> {
    if ratio < 1 {
        return Err(CorpusError::InvalidRatio(ratio));
    }
    let positives = records.iter().filter(|r| r.reverted).count();
    let negatives = records.len() - positives;
    let wanted = positives.saturating_mul(ratio as usize).min(negatives);
    if wanted == negatives {
        return Ok(records);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = sample_sorted(&mut rng, negatives, wanted);
    let mut keep = keep.into_iter().peekable();
    let mut neg_index = 0;
    Ok(records
        .into_iter()
        .filter(|r| {
            if r.reverted {
                return true;
            }
            let i = neg_index;
            neg_index += 1;
            if keep.peek() == Some(&i) {
                keep.next();
                true
            } else {
                false
            }
        })
        .collect())
}

/// Downsamples the larger class to the size of the smaller one. The minority
/// class is left untouched and input order is kept.
pub fn balance_lmc_training<T>(changes: Vec<(T, bool)>, seed: u64) -> Result<Vec<(T, bool)>, CorpusError> {
    let pos = changes.iter().filter(|(_, y)| *y).count();
    let neg = changes.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(CorpusError::SingleClass);
    }
    if pos == neg {
        return Ok(changes);
    }
    let majority = pos > neg;
    let (big, small) = if majority { (pos, neg) } else { (neg, pos) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = sample_sorted(&mut rng, big, small);
    let mut keep = keep.into_iter().peekable();
    let mut idx = 0;
    Ok(changes
        .into_iter()
        .filter(|(_, y)| {
            if *y != majority {
                return true;
            }
            let i = idx;
            idx += 1;
            if keep.peek() == Some(&i) {
                keep.next();
                true
            } else {
                false
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EditorInfo;
    use chrono::{TimeZone, Utc};

    fn records(pos: usize, neg: usize) -> Vec<RevisionRecord> {
        (0..pos + neg)
            .map(|i| RevisionRecord {
                revision_id: i as u64 + 1,
                entity_id: "Q1".parse().unwrap(),
                timestamp: Utc.timestamp_opt(1_600_000_000, 0).unwrap(),
                parent_revision_id: None,
                editor: EditorInfo::anonymous(),
                tags: Default::default(),
                deltas: vec![],
                reverted: i < pos,
                reverting_editor: None,
                is_revert_of: None,
                entity_is_human: None,
            })
            .collect()
    }

    fn counts(r: &[RevisionRecord]) -> (usize, usize) {
        let p = r.iter().filter(|r| r.reverted).count();
        (p, r.len() - p)
    }

    #[test]
    fn one_to_five() {
        let out = balance_negatives(records(10, 1000), 5, 7).unwrap();
        assert_eq!(counts(&out), (10, 50));
    }

    #[test]
    fn too_few_negatives_keeps_everything() {
        let out = balance_negatives(records(10, 3), 5, 7).unwrap();
        assert_eq!(counts(&out), (10, 3));
    }

    #[test]
    fn deterministic_and_validated() {
        let a = balance_negatives(records(10, 1000), 5, 99).unwrap();
        let b = balance_negatives(records(10, 1000), 5, 99).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            balance_negatives(records(1, 1), 0, 1),
            Err(CorpusError::InvalidRatio(0))
        ));
    }

    #[test]
    fn lmc_balancing() {
        let data: Vec<(usize, bool)> = (0..500).map(|i| (i, i < 100)).collect();
        let out = balance_lmc_training(data.clone(), 3).unwrap();
        assert_eq!(out.iter().filter(|(_, y)| *y).count(), 100);
        assert_eq!(out.iter().filter(|(_, y)| !*y).count(), 100);
        // Minority untouched.
        assert!(out.iter().filter(|(_, y)| *y).map(|(i, _)| *i).eq(0..100));
        assert_eq!(out, balance_lmc_training(data, 3).unwrap());

        let even: Vec<(usize, bool)> = (0..100).map(|i| (i, i < 50)).collect();
        assert_eq!(balance_lmc_training(even.clone(), 1).unwrap(), even);

        let one: Vec<(usize, bool)> = (0..10).map(|i| (i, true)).collect();
        assert!(matches!(balance_lmc_training(one, 1), Err(CorpusError::SingleClass)));
    }
}
