//! Skip-gram with negative sampling over random-walk corpora.

use std::sync::atomic::{AtomicUsize, Ordering};

use super::graph::InteractionGraph;
use super::table::{EmbeddingTable, GraphMethod, DEFAULT_GRAPH_DIM};
use super::walks::{generate_walks, WalkConfig};
use crate::error::{Error, Result};
use crate::rng;
use crate::sgns::{self, LinearDecay, NoiseSampler, ParamMatrix, Scratch, Step};

#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub start_lr: f64,
    pub end_lr: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: DEFAULT_GRAPH_DIM,
            window: 10,
            negatives: 5,
            epochs: 1,
            start_lr: sgns::DEFAULT_START_LR,
            end_lr: sgns::DEFAULT_END_LR,
            seed: 1,
            threads: 1,
        }
    }
}

/// Trained input and output matrices before they are wrapped in a table.
pub struct SkipGramModel {
    pub input: ParamMatrix,
    pub output: ParamMatrix,
    /// Mean loss per walk in training order.
    pub loss_trace: Vec<f64>,
}

pub fn train_skipgram(walks: &[Vec<usize>], n_nodes: usize, cfg: &SkipGramConfig) -> Result<SkipGramModel> {
    if walks.iter().all(|w| w.len() < 2) {
        return Err(Error::Empty("walk corpus has no node pairs".into()));
    }
    if cfg.dim == 0 || cfg.window == 0 {
        return Err(Error::Config("skip-gram dimension and window must be positive".into()));
    }
    let mut freq = vec![0.0; n_nodes];
    for &v in walks.iter().flatten() {
        freq[v] += 1.0;
    }
    let noise = NoiseSampler::new(&freq)?;

    let mut init_rng = rng::seeded(cfg.seed, &[0x56E]);
    let input = ParamMatrix::uniform(n_nodes, cfg.dim, &mut init_rng);
    let output = ParamMatrix::zeros(n_nodes, cfg.dim);

    let positions: usize = walks.iter().map(Vec::len).sum();
    let decay = LinearDecay {
        start: cfg.start_lr,
        end: cfg.end_lr,
        total: positions * cfg.epochs,
    };
    let progress = AtomicUsize::new(0);
    let mut loss_trace = Vec::with_capacity(walks.len() * cfg.epochs);

    for epoch in 0..cfg.epochs {
        let parts = sgns::hogwild(walks.len(), cfg.threads, |worker, range| {
            let mut rng = rng::seeded(cfg.seed, &[0x56F, epoch as u64, worker as u64]);
            let mut scratch = Scratch::new(cfg.dim);
            let mut negatives = vec![0; cfg.negatives];
            let mut trace = Vec::with_capacity(range.len());
            for walk in &walks[range] {
                let (mut loss, mut n) = (0.0, 0usize);
                for i in 0..walk.len() {
                    let lr = decay.at(progress.fetch_add(1, Ordering::Relaxed));
                    let lo = i.saturating_sub(cfg.window);
                    let hi = (i + cfg.window + 1).min(walk.len());
                    for j in (lo..hi).filter(|&j| j != i) {
                        noise.fill(&mut rng, &mut negatives);
                        let step = Step {
                            inputs: std::slice::from_ref(&walk[i]),
                            target: walk[j],
                            negatives: &negatives,
                        };
                        loss += scratch.train(&input, &output, step, lr);
                        n += 1;
                    }
                }
                if n > 0 {
                    trace.push(loss / n as f64);
                }
            }
            trace
        });
        loss_trace.extend(parts.into_iter().flatten());
    }
    Ok(SkipGramModel {
        input,
        output,
        loss_trace,
    })
}

/// Walks the graph and trains skip-gram on the walks. `method` only tags
/// the table; the walk law comes from `walk.p` and `walk.q`.
pub fn train_skipgram_walks(
    graph: &InteractionGraph,
    walk: &WalkConfig,
    method: GraphMethod,
    dim: usize,
    negatives: usize,
    threads: usize,
) -> Result<EmbeddingTable> {
    let walks = generate_walks(graph, walk)?;
    let cfg = SkipGramConfig {
        dim,
        window: walk.window,
        negatives,
        epochs: walk.epochs,
        seed: walk.seed,
        threads,
        ..SkipGramConfig::default()
    };
    let model = train_skipgram(&walks, graph.node_count(), &cfg)?;
    let mut table = EmbeddingTable::new(method, graph.ids().to_vec(), dim, model.input.to_vec())?;
    table.loss_trace = model.loss_trace;
    Ok(table)
}

pub fn deepwalk(graph: &InteractionGraph, walk: &WalkConfig, dim: usize, threads: usize) -> Result<EmbeddingTable> {
    let walk = WalkConfig { p: 1.0, q: 1.0, ..walk.clone() };
    train_skipgram_walks(graph, &walk, GraphMethod::DeepWalk, dim, 5, threads)
}

pub fn node2vec(graph: &InteractionGraph, walk: &WalkConfig, dim: usize, threads: usize) -> Result<EmbeddingTable> {
    train_skipgram_walks(graph, walk, GraphMethod::Node2Vec, dim, 5, threads)
}
