use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectors_io;

/// Embedding dimension used for every interaction method.
pub const DEFAULT_GRAPH_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphMethod {
    #[serde(rename = "dw")]
    DeepWalk,
    #[serde(rename = "n2v")]
    Node2Vec,
    #[serde(rename = "re")]
    Relational,
}

impl GraphMethod {
    pub fn tag(self) -> &'static str {
        match self {
            GraphMethod::DeepWalk => "dw",
            GraphMethod::Node2Vec => "n2v",
            GraphMethod::Relational => "re",
        }
    }
}

impl fmt::Display for GraphMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for GraphMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dw" | "deepwalk" => Ok(GraphMethod::DeepWalk),
            "n2v" | "node2vec" => Ok(GraphMethod::Node2Vec),
            "re" | "relational" => Ok(GraphMethod::Relational),
            other => Err(Error::Config(format!("unknown graph method `{other}`"))),
        }
    }
}

/// Result of [`EmbeddingTable::lookup`]; unknown ids give zeros with `absent` set.
#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    pub vector: Vec<f64>,
    pub absent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub method: GraphMethod,
    pub dim: usize,
    ids: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
    /// Mean loss per training segment, in training order (empty for loaded tables).
    pub loss_trace: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(method: GraphMethod, ids: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != ids.len() * dim {
            return Err(Error::Dimension {
                expected: ids.len() * dim,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("{method} embedding has non-finite entries")));
        }
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(EmbeddingTable {
            method,
            dim,
            ids,
            data,
            index,
            loss_trace: Vec::new(),
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        let i = *self.index.get(id)?;
        Some(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn lookup(&self, id: &str) -> Lookup {
        match self.get(id) {
            Some(v) => Lookup {
                vector: v.to_vec(),
                absent: false,
            },
            None => Lookup {
                vector: vec![0.0; self.dim],
                absent: true,
            },
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        vectors_io::write_vectors(path, &self.ids, self.dim, &self.data)
    }

    pub fn load(path: &Path, method: GraphMethod) -> Result<Self> {
        let (ids, dim, data) = vectors_io::read_vectors(path)?;
        Self::new(method, ids, dim, data)
    }
}
