use std::cmp::Ordering;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::smo::{self, SmoParams};
use super::{Classifier, Learner, Prediction};
use crate::corpus::PartyLabel;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    /// `1 / (d · var(X))` over every entry of the training matrix.
    Scale,
    Value(f64),
}

impl FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "scale" {
            return Ok(Gamma::Scale);
        }
        match s.parse::<f64>() {
            Ok(g) if g > 0.0 && g.is_finite() => Ok(Gamma::Value(g)),
            _ => Err(Error::Config(format!("gamma must be `scale` or a positive number, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiclass {
    Ovo,
    Ovr,
}

impl FromStr for Multiclass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ovo" => Ok(Multiclass::Ovo),
            "ovr" => Ok(Multiclass::Ovr),
            other => Err(Error::Config(format!("unknown multiclass scheme `{other}` (ovo|ovr)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub c: f64,
    pub gamma: Gamma,
    pub tol: f64,
    pub max_iter: usize,
    pub multiclass: Multiclass,
    pub standardize: bool,
    /// Kernel row cache per binary problem, in MiB.
    pub cache_mb: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
            max_iter: 10_000_000,
            multiclass: Multiclass::Ovo,
            standardize: false,
            cache_mb: 200,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One binary machine: `f(x) = Σ coef_i K(sv_i, x) - rho`, positive means `positive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub positive: usize,
    /// `None` for one-vs-rest machines.
    pub negative: Option<usize>,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i`.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl BinaryMachine {
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * smo::rbf(sv, x, gamma))
            .sum();
        sum - self.rho
    }

    /// Dual coefficients `alpha_i` of the support vectors.
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.coef.iter().map(|c| c.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &[Vec<f64>]) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var.into_iter().map(|s| (s / n).sqrt()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub format: u32,
    pub config: KernelConfig,
    pub classes: Vec<PartyLabel>,
    pub dim: usize,
    /// Resolved kernel bandwidth.
    pub gamma: f64,
    pub standardizer: Option<Standardizer>,
    pub machines: Vec<BinaryMachine>,
    pub n_train: usize,
}

fn check_finite(x: &[Vec<f64>], dim: usize) -> Result<()> {
    for row in x {
        if row.len() != dim {
            return Err(Error::Dimension { expected: dim, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite feature value".into()));
        }
    }
    Ok(())
}

fn scale_gamma(x: &[Vec<f64>], dim: usize) -> f64 {
    let count = (x.len() * dim) as f64;
    let mean = x.iter().flatten().sum::<f64>() / count;
    let var = x.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (dim as f64 * var)
    } else {
        1.0
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Trains an RBF-kernel SVM. Samples are put in a canonical order first, so
/// the trained model does not depend on the order of the input.
pub fn train_svm(x: &[Vec<f64>], labels: &[PartyLabel], cfg: &KernelConfig) -> Result<SvmModel> {
    cfg.validate()?;
    if x.len() != labels.len() {
        return Err(Error::Dimension { expected: x.len(), got: labels.len() });
    }
    if x.is_empty() {
        return Err(Error::Empty("no training samples".into()));
    }
    let dim = x[0].len();
    if dim == 0 {
        return Err(Error::Empty("training features have dimension 0".into()));
    }
    check_finite(x, dim)?;

    let mut classes: Vec<PartyLabel> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }

    let class_of: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).expect("label present")).collect();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| class_of[a].cmp(&class_of[b]).then_with(|| lex_cmp(&x[a], &x[b])));
    let sorted: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let class_of: Vec<usize> = order.iter().map(|&i| class_of[i]).collect();

    let standardizer = cfg.standardize.then(|| Standardizer::fit(&sorted));
    let prepared: Vec<Vec<f64>> = match &standardizer {
        Some(s) => sorted.iter().map(|r| s.apply(r)).collect(),
        None => sorted,
    };
    let gamma = match cfg.gamma {
        Gamma::Scale => scale_gamma(&prepared, dim),
        Gamma::Value(g) => g,
    };

    let k = classes.len();
    let problems: Vec<(usize, Option<usize>)> = match cfg.multiclass {
        Multiclass::Ovo => (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, Some(b)))).collect(),
        Multiclass::Ovr => (0..k).map(|a| (a, None)).collect(),
    };
    let params = SmoParams {
        c: cfg.c,
        gamma,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        cache_bytes: cfg.cache_mb << 20,
    };
    let machines = problems
        .into_par_iter()
        .map(|(pos, neg)| {
            let members: Vec<usize> = (0..prepared.len())
                .filter(|&i| class_of[i] == pos || neg.map_or(true, |n| class_of[i] == n))
                .collect();
            let mut flat = Vec::with_capacity(members.len() * dim);
            let mut y = Vec::with_capacity(members.len());
            for &i in &members {
                flat.extend_from_slice(&prepared[i]);
                y.push(if class_of[i] == pos { 1.0 } else { -1.0 });
            }
            let out = smo::solve(&flat, dim, &y, &params);
            if !out.converged {
                log::warn!(
                    "SMO for class {} stopped after {} iterations without reaching tolerance",
                    classes[pos],
                    out.iterations
                );
            }
            let mut support_vectors = Vec::new();
            let mut coef = Vec::new();
            for (t, &i) in members.iter().enumerate() {
                if out.alpha[t] > 0.0 {
                    support_vectors.push(prepared[i].clone());
                    coef.push(out.alpha[t] * y[t]);
                }
            }
            BinaryMachine {
                positive: pos,
                negative: neg,
                support_vectors,
                coef,
                rho: out.rho,
                iterations: out.iterations,
                converged: out.converged,
            }
        })
        .collect();

    Ok(SvmModel {
        format: FORMAT_VERSION,
        config: cfg.clone(),
        classes,
        dim,
        gamma,
        standardizer,
        machines,
        n_train: x.len(),
    })
}

/// Most votes, then larger summed margin, then the first class in sorted order.
fn ovo_winner(votes: &[u32], scores: &[f64]) -> usize {
    (0..votes.len())
        .reduce(|best, c| match votes[c].cmp(&votes[best]).then(scores[c].total_cmp(&scores[best])) {
            Ordering::Greater => c,
            _ => best,
        })
        .expect("at least two classes")
}

impl SvmModel {
    pub fn predict(&self, id: &str, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite feature for `{id}`")));
        }
        let prepared;
        let x = match &self.standardizer {
            Some(s) => {
                prepared = s.apply(x);
                &prepared[..]
            }
            None => x,
        };
        let k = self.classes.len();
        let mut votes = vec![0u32; k];
        let mut scores = vec![0.0; k];
        for m in &self.machines {
            let f = m.decision(x, self.gamma);
            match m.negative {
                Some(neg) => {
                    // An exact zero abstains, leaving the tie to the margin and name rules.
                    if f > 0.0 {
                        votes[m.positive] += 1;
                    } else if f < 0.0 {
                        votes[neg] += 1;
                    }
                    scores[m.positive] += f;
                    scores[neg] -= f;
                }
                None => {
                    if f > 0.0 {
                        votes[m.positive] += 1;
                    }
                    scores[m.positive] = f;
                }
            }
        }
        let winner = match self.config.multiclass {
            Multiclass::Ovo => ovo_winner(&votes, &scores),
            Multiclass::Ovr => (0..k)
                .reduce(|best, c| if scores[c] > scores[best] { c } else { best })
                .expect("at least two classes"),
        };
        Ok(Prediction {
            id: id.to_string(),
            label: self.classes[winner].clone(),
            margin: scores[winner],
            votes,
            scores,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SvmModel> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: SvmModel =
            serde_json::from_str(&text).map_err(|e| Error::parse(&path.display().to_string(), e.line(), e.to_string()))?;
        if model.format != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported model format {}", model.format)));
        }
        Ok(model)
    }
}

impl Classifier for SvmModel {
    fn classes(&self) -> &[PartyLabel] {
        &self.classes
    }

    fn predict(&self, id: &str, x: &[f64]) -> Result<Prediction> {
        SvmModel::predict(self, id, x)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SvmLearner(pub KernelConfig);

impl Learner for SvmLearner {
    fn fit(&self, x: &[Vec<f64>], labels: &[PartyLabel], _seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(train_svm(x, labels, &self.0)?))
    }
}
