use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::PartyLabel;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

/// Stratified k-fold split. Each class is shuffled on its own stream and dealt
/// round-robin, continuing where the previous class stopped, so every fold gets
/// `floor` or `ceil` of its proportional share per class and in total.
pub fn kfold_split(users: &[(String, PartyLabel)], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    if k > users.len() {
        return Err(Error::Config(format!("k = {k} exceeds the {} users available", users.len())));
    }
    let mut by_class: BTreeMap<&PartyLabel, Vec<&str>> = BTreeMap::new();
    for (id, label) in users {
        by_class.entry(label).or_default().push(id);
    }
    let mut assignment: Vec<Vec<&str>> = vec![Vec::new(); k];
    let mut next = 0usize;
    for (c, (label, mut ids)) in by_class.into_iter().enumerate() {
        if ids.len() < k {
            log::warn!("class {label} has {} users, fewer than k = {k}; some folds will lack it", ids.len());
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng::seeded(seed, &[0xF01D, c as u64]));
        for id in ids {
            assignment[next % k].push(id);
            next += 1;
        }
    }
    let folds = (0..k)
        .map(|f| {
            let mut test: Vec<String> = assignment[f].iter().map(|s| s.to_string()).collect();
            test.sort();
            let mut train: Vec<String> = assignment
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, ids)| ids.iter().map(|s| s.to_string()))
                .collect();
            train.sort();
            Fold { train, test }
        })
        .collect();
    Ok(FoldSplit { k, seed, folds })
}
