use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::corpus::RetweetEdge;
use crate::error::{Error, Result};

/// Retweet graph over every user appearing in an edge (plus any extra
/// nodes). Parallel edges are merged by summing weights; the undirected view
/// adds the weights of both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    out: Vec<Vec<(usize, f64)>>,
    undirected: Vec<Vec<(usize, f64)>>,
}

pub fn build_graph(edges: &[RetweetEdge]) -> Result<InteractionGraph> {
    InteractionGraph::with_nodes(edges, std::iter::empty::<&str>())
}

impl InteractionGraph {
    /// Node ids are sorted, so equal edge sets give identical graphs.
    pub fn with_nodes<'a>(edges: &[RetweetEdge], extra: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut names: BTreeSet<&str> = extra.into_iter().collect();
        for e in edges {
            if e.source == e.target {
                return Err(Error::Config(format!("self-loop on `{}`", e.source)));
            }
            if e.weight == 0 {
                return Err(Error::Config("retweet weight must be at least 1".into()));
            }
            names.insert(&e.source);
            names.insert(&e.target);
        }
        if names.len() < 2 {
            return Err(Error::TooFewNodes(names.len()));
        }
        let ids: Vec<String> = names.into_iter().map(str::to_string).collect();
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();

        let mut directed: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for e in edges {
            *directed.entry((index[&e.source], index[&e.target])).or_default() += u64::from(e.weight);
        }
        let mut sym: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        let mut out = vec![Vec::new(); ids.len()];
        for (&(s, t), &w) in &directed {
            out[s].push((t, w as f64));
            *sym.entry((s, t)).or_default() += w;
            *sym.entry((t, s)).or_default() += w;
        }
        let mut undirected = vec![Vec::new(); ids.len()];
        for ((a, b), w) in sym {
            undirected[a].push((b, w as f64));
        }
        Ok(InteractionGraph {
            ids,
            index,
            out,
            undirected,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Undirected neighbours of `v`, sorted by node index.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.undirected[v]
    }

    /// Merged outgoing (retweeter -> retweeted) edges of `v`.
    pub fn out_edges(&self, v: usize) -> &[(usize, f64)] {
        &self.out[v]
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(s, es)| es.iter().map(move |&(t, w)| (s, t, w)))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.undirected[a].binary_search_by_key(&b, |&(n, _)| n).is_ok()
    }

    /// Weighted degree in the undirected view.
    pub fn degree(&self, v: usize) -> f64 {
        self.undirected[v].iter().map(|&(_, w)| w).sum()
    }
}
