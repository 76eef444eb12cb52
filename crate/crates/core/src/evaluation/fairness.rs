use serde::{Deserialize, Serialize};

use super::{auc, EvaluationError, ScoredDataset};
use crate::corpus::slices;

pub const DEFAULT_DIR_THRESHOLD: f64 = 0.5;

/// Two groups of one slice to compare. Rows whose slice value is neither
/// group are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessGroupSpec {
    pub slice: String,
    pub privileged: String,
    pub unprivileged: String,
    /// A row is flagged when its score is at least this value.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_DIR_THRESHOLD
}

impl FairnessGroupSpec {
    pub fn new(slice: &str, privileged: &str, unprivileged: &str) -> Self {
        Self {
            slice: slice.to_owned(),
            privileged: privileged.to_owned(),
            unprivileged: unprivileged.to_owned(),
            threshold: DEFAULT_DIR_THRESHOLD,
        }
    }

    /// Registered (privileged) against anonymous editors.
    pub fn anonymous() -> Self {
        Self::new(slices::EDITOR, "registered", "anonymous")
    }

    /// Experienced (privileged) against new editors, among registered editors.
    pub fn newcomer() -> Self {
        Self::new(slices::TENURE, "experienced", "new")
    }

    pub fn swapped(&self) -> Self {
        Self {
            privileged: self.unprivileged.clone(),
            unprivileged: self.privileged.clone(),
            ..self.clone()
        }
    }

    fn groups(&self, data: &ScoredDataset) -> Result<(ScoredDataset, ScoredDataset), EvaluationError> {
        let get = |g: &str| {
            data.subset(&self.slice, g).ok_or_else(|| EvaluationError::EmptyGroup {
                slice: self.slice.clone(),
                group: g.to_owned(),
            })
        };
        Ok((get(&self.privileged)?, get(&self.unprivileged)?))
    }
}

fn flag_rate(data: &ScoredDataset, threshold: f64) -> f64 {
    data.rows().iter().filter(|r| r.score >= threshold).count() as f64 / data.len() as f64
}

/// Pr(flagged | unprivileged) / Pr(flagged | privileged).
pub fn disparate_impact_ratio(data: &ScoredDataset, spec: &FairnessGroupSpec) -> Result<f64, EvaluationError> {
    let (privileged, unprivileged) = spec.groups(data)?;
    let denom = flag_rate(&privileged, spec.threshold);
    if denom == 0.0 {
        return Err(EvaluationError::ZeroPrivilegedRate {
            slice: spec.slice.clone(),
        });
    }
    Ok(flag_rate(&unprivileged, spec.threshold) / denom)
}

/// AUC(privileged) - AUC(unprivileged); zero means parity.
pub fn delta_auc(data: &ScoredDataset, spec: &FairnessGroupSpec) -> Result<f64, EvaluationError> {
    let (privileged, unprivileged) = spec.groups(data)?;
    let group_auc = |d: &ScoredDataset, g: &str| {
        auc(d).map_err(|_| EvaluationError::SingleClassInGroup {
            slice: spec.slice.clone(),
            group: g.to_owned(),
        })
    };
    Ok(group_auc(&privileged, &spec.privileged)? - group_auc(&unprivileged, &spec.unprivileged)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::ScoredRow;

    fn row(score: f64, label: bool, group: &str) -> ScoredRow {
        ScoredRow {
            score,
            label,
            groups: [(slices::EDITOR.to_owned(), group.to_owned())].into(),
        }
    }

    #[test]
    fn dir_counts() {
        let mut rows = Vec::new();
        for (i, s) in [0.9, 0.6, 0.1, 0.2].iter().enumerate() {
            rows.push(row(*s, i == 0, "anonymous"));
        }
        for (i, s) in [0.7, 0.3, 0.1, 0.2].iter().enumerate() {
            rows.push(row(*s, i == 0, "registered"));
        }
        let d = ScoredDataset::new(rows).unwrap();
        let spec = FairnessGroupSpec::anonymous();
        assert_eq!(disparate_impact_ratio(&d, &spec).unwrap(), 2.0);
        assert_eq!(disparate_impact_ratio(&d, &spec.swapped()).unwrap(), 0.5);
    }

    #[test]
    fn dir_guards() {
        let d = ScoredDataset::new(vec![row(0.9, true, "anonymous"), row(0.1, false, "registered")]).unwrap();
        assert!(matches!(
            disparate_impact_ratio(&d, &FairnessGroupSpec::anonymous()),
            Err(EvaluationError::ZeroPrivilegedRate { .. })
        ));
        let only = ScoredDataset::new(vec![row(0.9, true, "anonymous")]).unwrap();
        assert!(matches!(
            disparate_impact_ratio(&only, &FairnessGroupSpec::anonymous()),
            Err(EvaluationError::EmptyGroup { .. })
        ));
    }

    #[test]
    fn dauc_extremes() {
        let d = ScoredDataset::new(vec![
            row(0.9, true, "registered"),
            row(0.1, false, "registered"),
            row(0.1, true, "anonymous"),
            row(0.9, false, "anonymous"),
        ])
        .unwrap();
        let spec = FairnessGroupSpec::anonymous();
        assert_eq!(delta_auc(&d, &spec).unwrap(), 1.0);
        assert_eq!(delta_auc(&d, &spec.swapped()).unwrap(), -1.0);
        let single = ScoredDataset::new(vec![row(0.9, true, "registered"), row(0.1, true, "anonymous")]).unwrap();
        assert!(matches!(delta_auc(&single, &spec), Err(EvaluationError::SingleClassInGroup { .. })));
    }
}
