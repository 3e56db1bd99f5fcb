use serde::{Deserialize, Serialize};

use crate::corpus::PartyLabel;
use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<PartyLabel>,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

impl ConfusionMatrix {
    /// `classes` is sorted and deduplicated.
    pub fn new(classes: &[PartyLabel]) -> Self {
        let mut classes = classes.to_vec();
        classes.sort();
        classes.dedup();
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(classes: Vec<PartyLabel>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != classes.len() || counts.iter().any(|r| r.len() != classes.len()) {
            return Err(Error::Dimension {
                expected: classes.len(),
                got: counts.len(),
            });
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    fn index(&self, label: &PartyLabel) -> Result<usize> {
        self.classes
            .binary_search(label)
            .map_err(|_| Error::Config(format!("label {label} is not in the class list")))
    }

    pub fn add(&mut self, truth: &PartyLabel, predicted: &PartyLabel) -> Result<()> {
        let (t, p) = (self.index(truth)?, self.index(predicted)?);
        self.counts[t][p] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Precision, recall and F1 per class; any zero denominator yields 0.
    pub fn per_class(&self) -> Vec<ClassScores> {
        let k = self.classes.len();
        (0..k)
            .map(|c| {
                let tp = self.counts[c][c] as f64;
                let predicted: u64 = (0..k).map(|r| self.counts[r][c]).sum();
                let support: u64 = self.counts[c].iter().sum();
                let ratio = |num: f64, den: u64| if den == 0 { 0.0 } else { num / den as f64 };
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassScores {
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..self.classes.len()).map(|c| self.counts[c][c]).sum::<u64>() as f64 / total as f64
    }
}

/// Unweighted mean of per-class F1, as a percentage.
pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.classes.is_empty() {
        return Err(Error::Empty("confusion matrix has no classes".into()));
    }
    let scores = cm.per_class();
    Ok(100.0 * scores.iter().map(|s| s.f1).sum::<f64>() / scores.len() as f64)
}
