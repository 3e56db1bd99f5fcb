//! Relational embeddings: predict the retweeted user from the retweeter.
//!
//! Every directed pair `(s, t)` is a positive example, repeated `weight`
//! times, scored as `σ(u_s · v_t)` against noise targets drawn from target
//! frequency^0.75. Retweeters (`u`) and retweeted users (`v`) have separate
//! tables. No walks are involved.

use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::graph::InteractionGraph;
use super::table::{EmbeddingTable, GraphMethod, DEFAULT_GRAPH_DIM};
use crate::error::{Error, Result};
use crate::rng;
use crate::sgns::{self, LinearDecay, NoiseSampler, ParamMatrix, Scratch, Step};

/// Which parameter table becomes the user embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationalOutput {
    #[default]
    Source,
    Target,
    Average,
}

impl FromStr for RelationalOutput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(RelationalOutput::Source),
            "target" => Ok(RelationalOutput::Target),
            "average" | "avg" => Ok(RelationalOutput::Average),
            other => Err(Error::Config(format!("unknown relational output `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationalConfig {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub start_lr: f64,
    pub end_lr: f64,
    pub output: RelationalOutput,
    pub seed: u64,
    pub threads: usize,
}

impl Default for RelationalConfig {
    fn default() -> Self {
        RelationalConfig {
            dim: DEFAULT_GRAPH_DIM,
            negatives: 5,
            epochs: 5,
            start_lr: sgns::DEFAULT_START_LR,
            end_lr: sgns::DEFAULT_END_LR,
            output: RelationalOutput::Source,
            seed: 1,
            threads: 1,
        }
    }
}

pub struct RelationalModel {
    /// Retweeter vectors.
    pub source: ParamMatrix,
    /// Retweeted-user vectors.
    pub target: ParamMatrix,
    /// Mean loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Pair list with each directed edge repeated `weight` times.
pub fn expand_pairs(graph: &InteractionGraph) -> Vec<(usize, usize)> {
    graph
        .directed_edges()
        .flat_map(|(s, t, w)| std::iter::repeat((s, t)).take(w as usize))
        .collect()
}

pub fn fit_relational(graph: &InteractionGraph, cfg: &RelationalConfig) -> Result<RelationalModel> {
    if cfg.dim == 0 {
        return Err(Error::Config("relational dimension must be positive".into()));
    }
    let mut pairs = expand_pairs(graph);
    if pairs.is_empty() {
        return Err(Error::Empty("relational training needs at least one edge".into()));
    }
    let n = graph.node_count();
    let mut target_freq = vec![0.0; n];
    for &(_, t) in &pairs {
        target_freq[t] += 1.0;
    }
    let noise = NoiseSampler::new(&target_freq)?;

    let mut init_rng = rng::seeded(cfg.seed, &[0x2E0]);
    let source = ParamMatrix::uniform(n, cfg.dim, &mut init_rng);
    let target = ParamMatrix::zeros(n, cfg.dim);

    let decay = LinearDecay {
        start: cfg.start_lr,
        end: cfg.end_lr,
        total: pairs.len() * cfg.epochs,
    };
    let progress = AtomicUsize::new(0);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        pairs.shuffle(&mut rng::seeded(cfg.seed, &[0x2E1, epoch as u64]));
        let pairs = &pairs;
        let parts = sgns::hogwild(pairs.len(), cfg.threads, |worker, range| {
            let mut rng = rng::seeded(cfg.seed, &[0x2E2, epoch as u64, worker as u64]);
            let mut scratch = Scratch::new(cfg.dim);
            let mut negatives = vec![0; cfg.negatives];
            let mut loss = 0.0;
            let count = range.len();
            for &(s, t) in &pairs[range] {
                let lr = decay.at(progress.fetch_add(1, Ordering::Relaxed));
                noise.fill(&mut rng, &mut negatives);
                let step = Step {
                    inputs: std::slice::from_ref(&s),
                    target: t,
                    negatives: &negatives,
                };
                loss += scratch.train(&source, &target, step, lr);
            }
            (loss, count)
        });
        let (loss, count) = parts.into_iter().fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        epoch_losses.push(loss / count as f64);
    }
    Ok(RelationalModel {
        source,
        target,
        epoch_losses,
    })
}

pub fn train_relational(graph: &InteractionGraph, cfg: &RelationalConfig) -> Result<EmbeddingTable> {
    let model = fit_relational(graph, cfg)?;
    let data = match cfg.output {
        RelationalOutput::Source => model.source.to_vec(),
        RelationalOutput::Target => model.target.to_vec(),
        RelationalOutput::Average => model
            .source
            .to_vec()
            .into_iter()
            .zip(model.target.to_vec())
            .map(|(a, b)| 0.5 * (a + b))
            .collect(),
    };
    let mut table = EmbeddingTable::new(GraphMethod::Relational, graph.ids().to_vec(), cfg.dim, data)?;
    table.loss_trace = model.epoch_losses;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RetweetEdge;
    use crate::graph_embeddings::build_graph;
    use crate::sgns::sigmoid;

    fn e(s: &str, t: &str, w: u32) -> RetweetEdge {
        RetweetEdge {
            source: s.into(),
            target: t.into(),
            weight: w,
        }
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn positive_pair_outscores_noise() {
        // a -> b is the only edge a makes; x is a popular target for others.
        let g = build_graph(&[e("a", "b", 1), e("c", "x", 3), e("d", "x", 3)]).unwrap();
        let cfg = RelationalConfig {
            epochs: 300,
            start_lr: 0.1,
            seed: 3,
            ..RelationalConfig::default()
        };
        let m = fit_relational(&g, &cfg).unwrap();
        let id = |s: &str| g.index_of(s).unwrap();
        let ua = m.source.row(id("a"));
        let pos = sigmoid(dot(&ua, &m.target.row(id("b"))));
        let neg = sigmoid(dot(&ua, &m.target.row(id("x"))));
        assert!(pos > neg, "{pos} vs {neg}");
        assert!(m.epoch_losses.first() > m.epoch_losses.last());
    }

    #[test]
    fn weights_repeat_pairs() {
        let g = build_graph(&[e("a", "b", 3), e("b", "c", 1)]).unwrap();
        assert_eq!(expand_pairs(&g).len(), 4);
    }

    #[test]
    fn output_switch() {
        let g = build_graph(&[e("a", "b", 2), e("b", "c", 1), e("c", "a", 1)]).unwrap();
        let base = RelationalConfig {
            dim: 4,
            ..RelationalConfig::default()
        };
        let src = train_relational(&g, &base).unwrap();
        let tgt = train_relational(&g, &RelationalConfig { output: RelationalOutput::Target, ..base.clone() }).unwrap();
        let avg = train_relational(&g, &RelationalConfig { output: RelationalOutput::Average, ..base.clone() }).unwrap();
        for id in ["a", "b", "c"] {
            for k in 0..4 {
                let expect = 0.5 * (src.get(id).unwrap()[k] + tgt.get(id).unwrap()[k]);
                assert!((avg.get(id).unwrap()[k] - expect).abs() < 1e-15);
            }
        }
        assert_eq!(src, train_relational(&g, &base).unwrap());
    }
}
