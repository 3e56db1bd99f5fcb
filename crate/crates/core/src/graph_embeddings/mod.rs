//! Interaction-based user vectors learned from the retweet graph.

mod alias;
mod graph;
mod relational;
mod skipgram;
mod table;
mod walks;

pub use alias::AliasTable;
pub use graph::{build_graph, InteractionGraph};
pub use relational::{expand_pairs, fit_relational, train_relational, RelationalConfig, RelationalModel, RelationalOutput};
pub use skipgram::{deepwalk, node2vec, train_skipgram, train_skipgram_walks, SkipGramConfig, SkipGramModel};
pub use table::{EmbeddingTable, GraphMethod, Lookup, DEFAULT_GRAPH_DIM};
pub use walks::{generate_walks, transition_distribution, WalkConfig, Walker};
