use serde::{Deserialize, Serialize};

use super::{EvaluationError, ScoredDataset};

/// Mann–Whitney AUC over parallel slices: (concordant + ties / 2) / (P * N).
/// Sorting dominates, so this is O(n log n).
pub fn auc_of(scores: &[f64], labels: &[bool]) -> Result<f64, EvaluationError> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let (mut concordant, mut ties) = (0.0f64, 0.0f64);
    let mut negatives_below = 0u64;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut pos, mut neg) = (0u64, 0u64);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                pos += 1;
            } else {
                neg += 1;
            }
            i += 1;
        }
        concordant += (pos * negatives_below) as f64;
        ties += (pos * neg) as f64;
        negatives_below += neg;
    }
    let positives = labels.iter().filter(|l| **l).count() as f64;
    let negatives = labels.len() as f64 - positives;
    if positives == 0.0 || negatives == 0.0 {
        return Err(EvaluationError::SingleClass);
    }
    Ok((concordant + 0.5 * ties) / (positives * negatives))
}

pub fn auc(data: &ScoredDataset) -> Result<f64, EvaluationError> {
    auc_of(&data.scores(), &data.labels())
}

/// Largest share of rows that can be dropped, lowest scores first, while the
/// kept rows still hold `recall` of all positives. Rows tied with the last
/// kept score are kept too, so the rate is never overstated.
pub fn filter_rate_at_recall(data: &ScoredDataset, recall: f64) -> Result<f64, EvaluationError> {
    if !(recall > 0.0 && recall <= 1.0) {
        return Err(EvaluationError::InvalidRecall(recall));
    }
    let total_pos = data.positives();
    if total_pos == 0 {
        return Err(EvaluationError::NoPositives);
    }
    // Guard against 0.9 * 10 landing a hair above 9.
    let needed = ((recall * total_pos as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut rows: Vec<(f64, bool)> = data.rows().iter().map(|r| (r.score, r.label)).collect();
    rows.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let mut found = 0;
    let mut kept = rows.len();
    for (k, &(_, label)) in rows.iter().enumerate() {
        found += usize::from(label);
        if found >= needed {
            kept = k + 1;
            break;
        }
    }
    let boundary = rows[kept - 1].0;
    while kept < rows.len() && rows[kept].0 == boundary {
        kept += 1;
    }
    Ok((rows.len() - kept) as f64 / rows.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    /// Share of rows scoring below the threshold.
    pub filter_rate: f64,
}

/// One point per distinct score, flagging rows with score >= threshold.
/// Thresholds descend.
pub fn precision_recall_table(data: &ScoredDataset) -> Result<Vec<PrPoint>, EvaluationError> {
    let total_pos = data.positives();
    if total_pos == 0 {
        return Err(EvaluationError::NoPositives);
    }
    let mut rows: Vec<(f64, bool)> = data.rows().iter().map(|r| (r.score, r.label)).collect();
    rows.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let n = rows.len();
    let mut out = Vec::new();
    let (mut tp, mut flagged) = (0usize, 0usize);
    let mut i = 0;
    while i < n {
        let s = rows[i].0;
        while i < n && rows[i].0 == s {
            tp += usize::from(rows[i].1);
            flagged += 1;
            i += 1;
        }
        out.push(PrPoint {
            threshold: s,
            precision: tp as f64 / flagged as f64,
            recall: tp as f64 / total_pos as f64,
            filter_rate: (n - flagged) as f64 / n as f64,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(scores: &[f64], labels: &[u8]) -> ScoredDataset {
        let labels: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        ScoredDataset::from_scores(scores, &labels).unwrap()
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&ds(&[0.9, 0.1], &[1, 0])).unwrap(), 1.0);
        assert_eq!(auc(&ds(&[0.5; 6], &[1, 0, 1, 0, 0, 1])).unwrap(), 0.5);
        assert!(matches!(auc(&ds(&[0.1, 0.2], &[1, 1])), Err(EvaluationError::SingleClass)));
    }

    #[test]
    fn filter_rate_examples() {
        let d = ds(&[0.9, 0.8, 0.2, 0.1, 0.7], &[1, 0, 0, 0, 1]);
        assert!((filter_rate_at_recall(&d, 1.0).unwrap() - 0.4).abs() < 1e-12);
        let perfect = ds(&[0.9, 0.8, 0.3, 0.2, 0.1], &[1, 1, 0, 0, 0]);
        assert!((filter_rate_at_recall(&perfect, 1.0).unwrap() - 0.6).abs() < 1e-12);
        let worst = ds(&[0.9, 0.8, 0.05], &[0, 1, 1]);
        assert_eq!(filter_rate_at_recall(&worst, 1.0).unwrap(), 0.0);
        assert!(matches!(
            filter_rate_at_recall(&ds(&[0.1], &[0]), 0.9),
            Err(EvaluationError::NoPositives)
        ));
        assert!(matches!(filter_rate_at_recall(&d, 0.0), Err(EvaluationError::InvalidRecall(_))));
    }

    #[test]
    fn ties_are_retained() {
        // Positive at 0.5 tied with two negatives: all three stay.
        let d = ds(&[0.9, 0.5, 0.5, 0.5, 0.1], &[1, 1, 0, 0, 0]);
        assert!((filter_rate_at_recall(&d, 1.0).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn pr_table() {
        let d = ds(&[0.9, 0.8, 0.2, 0.1, 0.7], &[1, 0, 0, 0, 1]);
        let t = precision_recall_table(&d).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t[0], PrPoint { threshold: 0.9, precision: 1.0, recall: 0.5, filter_rate: 0.8 });
        assert_eq!(t[2].recall, 1.0);
        assert!((t[2].precision - 2.0 / 3.0).abs() < 1e-12);
    }
}
