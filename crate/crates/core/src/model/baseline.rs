use std::collections::BTreeMap;

use rand::Rng;

use super::{Classifier, Learner, Prediction};
use crate::corpus::PartyLabel;
use crate::error::{Error, Result};
use crate::rng;

fn constant_prediction(classes: &[PartyLabel], id: &str, winner: usize) -> Prediction {
    let mut votes = vec![0; classes.len()];
    let mut scores = vec![0.0; classes.len()];
    votes[winner] = 1;
    scores[winner] = 1.0;
    Prediction {
        id: id.to_string(),
        label: classes[winner].clone(),
        votes,
        scores,
        margin: 1.0,
    }
}

fn class_list(labels: &[PartyLabel]) -> Result<Vec<PartyLabel>> {
    let mut classes = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.is_empty() {
        return Err(Error::Empty("no training labels".into()));
    }
    Ok(classes)
}

/// Always predicts the most frequent training label (ties: smaller label).
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityBaseline {
    classes: Vec<PartyLabel>,
    winner: usize,
}

impl MajorityBaseline {
    pub fn fit(labels: &[PartyLabel]) -> Result<Self> {
        let classes = class_list(labels)?;
        let mut counts: BTreeMap<&PartyLabel, usize> = BTreeMap::new();
        for l in labels {
            *counts.entry(l).or_default() += 1;
        }
        let winner = (0..classes.len())
            .reduce(|best, c| if counts[&classes[c]] > counts[&classes[best]] { c } else { best })
            .expect("non-empty");
        Ok(MajorityBaseline { classes, winner })
    }

    pub fn label(&self) -> &PartyLabel {
        &self.classes[self.winner]
    }
}

impl Classifier for MajorityBaseline {
    fn classes(&self) -> &[PartyLabel] {
        &self.classes
    }

    fn predict(&self, id: &str, _x: &[f64]) -> Result<Prediction> {
        Ok(constant_prediction(&self.classes, id, self.winner))
    }
}

/// Uniform draw over the classes. The draw for an instance depends only on
/// the seed and the instance id, so predictions are order-independent.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomBaseline {
    classes: Vec<PartyLabel>,
    seed: u64,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

impl RandomBaseline {
    pub fn new(classes: &[PartyLabel], seed: u64) -> Result<Self> {
        Ok(RandomBaseline {
            classes: class_list(classes)?,
            seed,
        })
    }
}

impl Classifier for RandomBaseline {
    fn classes(&self) -> &[PartyLabel] {
        &self.classes
    }

    fn predict(&self, id: &str, _x: &[f64]) -> Result<Prediction> {
        let mut r = rng::seeded(self.seed, &[0xBA5E, fnv1a(id)]);
        let winner = r.gen_range(0..self.classes.len());
        Ok(constant_prediction(&self.classes, id, winner))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MajorityLearner;

impl Learner for MajorityLearner {
    fn fit(&self, _x: &[Vec<f64>], labels: &[PartyLabel], _seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(MajorityBaseline::fit(labels)?))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomLearner;

impl Learner for RandomLearner {
    fn fit(&self, _x: &[Vec<f64>], labels: &[PartyLabel], seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(RandomBaseline::new(labels, seed)?))
    }
}
