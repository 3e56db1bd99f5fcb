//! RBF-kernel SVM classification, tweet-to-user voting and trivial baselines.

mod baseline;
mod smo;
mod svm;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::PartyLabel;
use crate::error::{Error, Result};

pub use baseline::{MajorityBaseline, MajorityLearner, RandomBaseline, RandomLearner};
pub use svm::{train_svm, BinaryMachine, Gamma, KernelConfig, Multiclass, Standardizer, SvmLearner, SvmModel, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub label: PartyLabel,
    /// Aligned with the classifier's class list.
    pub votes: Vec<u32>,
    pub scores: Vec<f64>,
    /// Decision score of the predicted class.
    pub margin: f64,
}

pub trait Classifier: Send + Sync {
    fn classes(&self) -> &[PartyLabel];
    fn predict(&self, id: &str, x: &[f64]) -> Result<Prediction>;
}

/// Something that produces a classifier from labelled rows. Lets evaluation
/// run the same protocol over SVMs, baselines and test oracles.
pub trait Learner: Sync {
    fn fit(&self, x: &[Vec<f64>], labels: &[PartyLabel], seed: u64) -> Result<Box<dyn Classifier>>;
}

/// Most frequent label; ties go to the higher mean margin, then the smaller label.
pub fn majority_vote(predictions: &[Prediction]) -> Result<PartyLabel> {
    if predictions.is_empty() {
        return Err(Error::Empty("no predictions to vote over".into()));
    }
    let mut tally: BTreeMap<&PartyLabel, (usize, f64)> = BTreeMap::new();
    for p in predictions {
        let e = tally.entry(&p.label).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += p.margin;
    }
    let mut best: Option<(&PartyLabel, usize, f64)> = None;
    for (label, (count, sum)) in tally {
        let mean = sum / count as f64;
        let better = match best {
            None => true,
            Some((_, c, m)) => count > c || (count == c && mean > m),
        };
        if better {
            best = Some((label, count, mean));
        }
    }
    Ok(best.expect("non-empty").0.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pred(label: &str, margin: f64) -> Prediction {
        Prediction {
            id: String::new(),
            label: PartyLabel::new(label),
            votes: vec![],
            scores: vec![],
            margin,
        }
    }

    #[test]
    fn vote_examples() {
        let a = PartyLabel::new("A");
        assert_eq!(majority_vote(&[pred("A", 0.1), pred("A", 0.1), pred("B", 5.0)]).unwrap(), a);
        assert_eq!(majority_vote(&[pred("A", 0.0)]).unwrap(), a);
        assert_eq!(majority_vote(&[pred("B", 0.2), pred("A", 0.7)]).unwrap(), a);
        assert_eq!(majority_vote(&[pred("B", 0.9), pred("A", 0.7)]).unwrap(), PartyLabel::new("B"));
        assert_eq!(majority_vote(&[pred("B", 0.5), pred("A", 0.5)]).unwrap(), a);
        assert!(majority_vote(&[]).is_err());
    }

    proptest! {
        #[test]
        fn vote_is_order_free(raw in prop::collection::vec((0u8..4, -4i32..4), 1..30), seed in any::<u64>()) {
            let preds: Vec<Prediction> = raw.iter().map(|&(l, m)| pred(&format!("p{l}"), m as f64 / 4.0)).collect();
            let mut shuffled = preds.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut crate::rng::seeded(seed, &[]));
            prop_assert_eq!(majority_vote(&preds).unwrap(), majority_vote(&shuffled).unwrap());
        }
    }
}
