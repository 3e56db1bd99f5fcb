use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::kfold_split;
use super::metrics::{macro_f1, ConfusionMatrix};
use crate::corpus::PartyLabel;
use crate::error::{Error, Result};
use crate::model::{majority_vote, Classifier, Learner, Prediction};
use crate::rng;

/// A labelled user with one feature row (user-level fusion) or one per tweet.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledUser {
    pub user_id: String,
    pub label: PartyLabel,
    pub instances: Vec<Instance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub vector: Vec<f64>,
}

impl LabeledUser {
    pub fn single(user_id: impl Into<String>, label: PartyLabel, vector: Vec<f64>) -> Self {
        let user_id = user_id.into();
        LabeledUser {
            instances: vec![Instance {
                id: user_id.clone(),
                vector,
            }],
            user_id,
            label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregate {
    /// One confusion matrix over the concatenated fold predictions.
    #[default]
    Pooled,
    MeanOfFolds,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    pub aggregate: Aggregate,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            k: 10,
            seed: 1,
            aggregate: Aggregate::Pooled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPrediction {
    pub user_id: String,
    pub truth: PartyLabel,
    pub predicted: PartyLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub folds: Vec<FoldResult>,
    pub confusion: ConfusionMatrix,
    pub macro_f1: f64,
    pub predictions: Vec<UserPrediction>,
}

fn training_rows(users: &[&LabeledUser]) -> (Vec<Vec<f64>>, Vec<PartyLabel>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for u in users {
        for inst in &u.instances {
            x.push(inst.vector.clone());
            y.push(u.label.clone());
        }
    }
    (x, y)
}

fn predict_user(model: &dyn Classifier, user: &LabeledUser) -> Result<PartyLabel> {
    let preds = user
        .instances
        .iter()
        .map(|inst| model.predict(&inst.id, &inst.vector))
        .collect::<Result<Vec<Prediction>>>()?;
    majority_vote(&preds)
}

fn evaluate(model: &dyn Classifier, test: &[&LabeledUser]) -> Result<Vec<UserPrediction>> {
    test.iter()
        .map(|u| {
            Ok(UserPrediction {
                user_id: u.user_id.clone(),
                truth: u.label.clone(),
                predicted: predict_user(model, u)?,
            })
        })
        .collect()
}

fn confusion(classes: &[PartyLabel], preds: &[UserPrediction]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(classes);
    for p in preds {
        cm.add(&p.truth, &p.predicted)?;
    }
    Ok(cm)
}

fn check_users(users: &[LabeledUser]) -> Result<()> {
    if let Some(u) = users.iter().find(|u| u.instances.is_empty()) {
        return Err(Error::Empty(format!("user `{}` has no feature rows", u.user_id)));
    }
    Ok(())
}

/// Stratified k-fold cross-validation at user level. Folds train in parallel;
/// results are assembled in fold order.
pub fn run_cv(users: &[LabeledUser], learner: &dyn Learner, opts: &CvOptions) -> Result<EvalOutcome> {
    check_users(users)?;
    let keys: Vec<(String, PartyLabel)> = users.iter().map(|u| (u.user_id.clone(), u.label.clone())).collect();
    let split = kfold_split(&keys, opts.k, opts.seed)?;
    let by_id: std::collections::HashMap<&str, &LabeledUser> = users.iter().map(|u| (u.user_id.as_str(), u)).collect();
    if by_id.len() != users.len() {
        return Err(Error::Config("duplicate user ids in evaluation set".into()));
    }
    let classes: Vec<PartyLabel> = keys.iter().map(|(_, l)| l.clone()).collect();

    let per_fold = split
        .folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let train: Vec<&LabeledUser> = fold.train.iter().map(|id| by_id[id.as_str()]).collect();
            let test: Vec<&LabeledUser> = fold.test.iter().map(|id| by_id[id.as_str()]).collect();
            let (x, y) = training_rows(&train);
            let model = learner.fit(&x, &y, rng::derive_seed(opts.seed, &[0xC5, f as u64]))?;
            let preds = evaluate(model.as_ref(), &test)?;
            Ok((train.len(), preds))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut folds = Vec::with_capacity(per_fold.len());
    let mut pooled = Vec::new();
    for (f, (n_train, preds)) in per_fold.into_iter().enumerate() {
        let cm = confusion(&classes, &preds)?;
        folds.push(FoldResult {
            fold: f,
            n_train,
            n_test: preds.len(),
            macro_f1: macro_f1(&cm)?,
        });
        pooled.extend(preds);
    }
    pooled.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    let cm = confusion(&classes, &pooled)?;
    let score = match opts.aggregate {
        Aggregate::Pooled => macro_f1(&cm)?,
        Aggregate::MeanOfFolds => folds.iter().map(|f| f.macro_f1).sum::<f64>() / folds.len() as f64,
    };
    Ok(EvalOutcome {
        folds,
        confusion: cm,
        macro_f1: score,
        predictions: pooled,
    })
}

/// Trains once on `train` and scores `test`.
pub fn run_transfer(train: &[LabeledUser], test: &[LabeledUser], learner: &dyn Learner, seed: u64) -> Result<EvalOutcome> {
    if test.is_empty() {
        return Err(Error::Empty("test tier has no users".into()));
    }
    if train.is_empty() {
        return Err(Error::Empty("training tier has no users".into()));
    }
    check_users(train)?;
    check_users(test)?;
    let train_refs: Vec<&LabeledUser> = train.iter().collect();
    let (x, y) = training_rows(&train_refs);
    let model = learner.fit(&x, &y, rng::derive_seed(seed, &[0x7F]))?;
    let test_refs: Vec<&LabeledUser> = test.iter().collect();
    let preds = evaluate(model.as_ref(), &test_refs)?;
    let classes: Vec<PartyLabel> = train.iter().chain(test).map(|u| u.label.clone()).collect();
    let cm = confusion(&classes, &preds)?;
    let score = macro_f1(&cm)?;
    Ok(EvalOutcome {
        folds: vec![FoldResult {
            fold: 0,
            n_train: train.len(),
            n_test: test.len(),
            macro_f1: score,
        }],
        confusion: cm,
        macro_f1: score,
        predictions: preds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KernelConfig, MajorityLearner, SvmLearner};

    /// Reads the label straight out of the first coordinate.
    struct Oracle(Vec<PartyLabel>);

    impl Classifier for Oracle {
        fn classes(&self) -> &[PartyLabel] {
            &self.0
        }

        fn predict(&self, id: &str, x: &[f64]) -> Result<Prediction> {
            let c = x[0] as usize;
            Ok(Prediction {
                id: id.into(),
                label: self.0[c].clone(),
                votes: vec![],
                scores: vec![],
                margin: 1.0,
            })
        }
    }

    struct OracleLearner;

    impl Learner for OracleLearner {
        fn fit(&self, _x: &[Vec<f64>], _y: &[PartyLabel], _seed: u64) -> Result<Box<dyn Classifier>> {
            Ok(Box::new(Oracle((0..5).map(|c| PartyLabel::new(format!("c{c}"))).collect())))
        }
    }

    fn users(per_class: usize, classes: usize) -> Vec<LabeledUser> {
        (0..classes)
            .flat_map(|c| {
                (0..per_class).map(move |i| LabeledUser::single(format!("u{c}_{i:03}"), PartyLabel::new(format!("c{c}")), vec![c as f64, i as f64]))
            })
            .collect()
    }

    #[test]
    fn oracle_scores_100_on_every_fold() {
        let out = run_cv(&users(20, 5), &OracleLearner, &CvOptions::default()).unwrap();
        assert_eq!(out.folds.len(), 10);
        assert!(out.folds.iter().all(|f| f.macro_f1 == 100.0));
        assert_eq!(out.macro_f1, 100.0);
        assert_eq!(out.confusion.total(), 100);
    }

    #[test]
    fn majority_baseline_matches_closed_form() {
        // Balanced 5 classes: training folds are also balanced up to ±1, so the
        // predicted class varies but each fold predicts one class.
        let out = run_transfer(&users(10, 5), &users(10, 5), &MajorityLearner, 0).unwrap();
        assert!((out.macro_f1 - 200.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn tweet_level_users_vote() {
        let mk = |id: &str, label: &str, rows: &[f64]| LabeledUser {
            user_id: id.into(),
            label: PartyLabel::new(label),
            instances: rows.iter().enumerate().map(|(i, &v)| Instance { id: format!("{id}_{i}"), vector: vec![v] }).collect(),
        };
        let train = vec![mk("a", "left", &[-2.0, -1.5, -1.0]), mk("b", "right", &[1.0, 1.5, 2.0])];
        let test = vec![mk("c", "left", &[-1.2, -0.8, 0.9]), mk("d", "right", &[1.1, -0.5, 1.4])];
        let out = run_transfer(&train, &test, &SvmLearner(KernelConfig::default()), 0).unwrap();
        assert_eq!(out.macro_f1, 100.0);
    }

    #[test]
    fn train_set_bound_is_at_least_cv() {
        let mut r = rng::seeded(17, &[]);
        use rand_distr::{Distribution, Normal};
        let n = Normal::new(0.0, 1.2).unwrap();
        let data: Vec<LabeledUser> = (0..3)
            .flat_map(|c| (0..30).map(move |i| (c, i)))
            .map(|(c, i)| LabeledUser::single(format!("u{c}_{i}"), PartyLabel::new(format!("c{c}")), vec![c as f64 + n.sample(&mut r), n.sample(&mut r)]))
            .collect();
        let learner = SvmLearner(KernelConfig::default());
        let cv = run_cv(&data, &learner, &CvOptions::default()).unwrap();
        let upper = run_transfer(&data, &data, &learner, 0).unwrap();
        assert!(upper.macro_f1 >= cv.macro_f1, "{} < {}", upper.macro_f1, cv.macro_f1);
        let mean = run_cv(&data, &learner, &CvOptions { aggregate: Aggregate::MeanOfFolds, ..CvOptions::default() }).unwrap();
        let avg = cv.folds.iter().map(|f| f.macro_f1).sum::<f64>() / 10.0;
        assert!((mean.macro_f1 - avg).abs() < 1e-12);
    }

    #[test]
    fn empty_test_tier_is_an_error() {
        assert!(run_transfer(&users(3, 2), &[], &MajorityLearner, 0).is_err());
    }
}
