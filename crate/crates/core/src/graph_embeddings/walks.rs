//! First- and second-order (p, q biased) random walks on the undirected view.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use super::graph::InteractionGraph;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    /// Nodes per walk, start included.
    pub walk_length: usize,
    /// Skip-gram context window over walks.
    pub window: usize,
    /// Skip-gram passes over the walk corpus.
    pub epochs: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            walk_length: 80,
            window: 10,
            epochs: 1,
            p: 1.0,
            q: 1.0,
            seed: 1,
        }
    }
}

impl WalkConfig {
    /// Unbiased walks.
    pub fn deepwalk() -> Self {
        WalkConfig::default()
    }

    /// Biased walks favouring community exploration (p = 1, q = 0.5).
    pub fn node2vec() -> Self {
        WalkConfig {
            q: 0.5,
            ..WalkConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.q > 0.0 && self.p.is_finite() && self.q.is_finite()) {
            return Err(Error::Config("walk parameters p and q must be positive".into()));
        }
        if self.walks_per_node == 0 || self.walk_length == 0 || self.window == 0 || self.epochs == 0 {
            return Err(Error::Config("walk counts, lengths, window and epochs must be positive".into()));
        }
        Ok(())
    }

    pub fn is_biased(&self) -> bool {
        self.p != 1.0 || self.q != 1.0
    }
}

/// Unnormalised bias for stepping `prev -> cur -> next`.
fn bias(graph: &InteractionGraph, prev: usize, next: usize, p: f64, q: f64) -> f64 {
    if next == prev {
        1.0 / p
    } else if graph.adjacent(next, prev) {
        1.0
    } else {
        1.0 / q
    }
}

/// Exact distribution over the next node from `cur`, having arrived from `prev`.
pub fn transition_distribution(
    graph: &InteractionGraph,
    prev: Option<usize>,
    cur: usize,
    p: f64,
    q: f64,
) -> Vec<(usize, f64)> {
    let raw: Vec<(usize, f64)> = graph
        .neighbors(cur)
        .iter()
        .map(|&(x, w)| (x, prev.map_or(w, |t| w * bias(graph, t, x, p, q))))
        .collect();
    let total: f64 = raw.iter().map(|&(_, w)| w).sum();
    raw.into_iter().map(|(x, w)| (x, w / total)).collect()
}

/// Precomputed alias tables for every node and, when biased, every
/// (previous, current) edge.
pub struct Walker<'g> {
    graph: &'g InteractionGraph,
    cfg: WalkConfig,
    node_tables: Vec<Option<AliasTable>>,
    /// `edge_tables[v][k]`: next-step table at `v` when arriving from its k-th neighbour.
    edge_tables: Vec<Vec<AliasTable>>,
}

impl<'g> Walker<'g> {
    pub fn new(graph: &'g InteractionGraph, cfg: &WalkConfig) -> Result<Self> {
        cfg.validate()?;
        let table = |weights: Vec<f64>| AliasTable::new(&weights);
        let node_tables = (0..graph.node_count())
            .into_par_iter()
            .map(|v| {
                let nb = graph.neighbors(v);
                if nb.is_empty() {
                    Ok(None)
                } else {
                    table(nb.iter().map(|&(_, w)| w).collect()).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let edge_tables = if cfg.is_biased() {
            (0..graph.node_count())
                .into_par_iter()
                .map(|v| {
                    graph
                        .neighbors(v)
                        .iter()
                        .map(|&(t, _)| table(transition_distribution(graph, Some(t), v, cfg.p, cfg.q).into_iter().map(|(_, pr)| pr).collect()))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Walker {
            graph,
            cfg: cfg.clone(),
            node_tables,
            edge_tables,
        })
    }

    /// Next node after `cur`, given where the walk came from.
    pub fn step<R: rand::Rng + ?Sized>(&self, prev: Option<usize>, cur: usize, rng: &mut R) -> Option<usize> {
        let nb = self.graph.neighbors(cur);
        let table = self.node_tables[cur].as_ref()?;
        let k = match prev {
            Some(t) if self.cfg.is_biased() => {
                let pos = nb.binary_search_by_key(&t, |&(n, _)| n).expect("walk follows edges");
                self.edge_tables[cur][pos].sample(rng)
            }
            _ => table.sample(rng),
        };
        Some(nb[k].0)
    }

    pub fn walk(&self, start: usize, rng: &mut rng::Rng) -> Vec<usize> {
        let mut walk = Vec::with_capacity(self.cfg.walk_length);
        walk.push(start);
        let mut prev = None;
        let mut cur = start;
        while walk.len() < self.cfg.walk_length {
            match self.step(prev, cur, rng) {
                Some(next) => {
                    prev = Some(cur);
                    cur = next;
                    walk.push(next);
                }
                None => break,
            }
        }
        walk
    }
}

/// `walks_per_node` walks from every node, ordered by round then node.
/// Each walk draws from its own seeded stream, so the corpus does not depend
/// on the number of worker threads.
pub fn generate_walks(graph: &InteractionGraph, cfg: &WalkConfig) -> Result<Vec<Vec<usize>>> {
    let walker = Walker::new(graph, cfg)?;
    let n = graph.node_count();
    Ok((0..cfg.walks_per_node * n)
        .into_par_iter()
        .map(|i| {
            let (round, node) = (i / n, i % n);
            let mut rng = rng::seeded(cfg.seed, &[0x3A1C, round as u64, node as u64]);
            walker.walk(node, &mut rng)
        })
        .collect())
}
