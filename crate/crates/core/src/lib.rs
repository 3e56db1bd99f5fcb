//! Hybrid text + interaction user representations for multi-party political
//! leaning inference on social media.
//!
//! The pipeline runs bottom-up through these modules:
//!
//! - [`corpus`]: region datasets, engagement tiers, filtering and a synthetic generator
//! - [`text_features`]: TF-IDF, CBOW word vectors, pooled contextual vectors
//! - [`graph_embeddings`]: DeepWalk, node2vec and relational embeddings of the retweet graph
//! - [`fusion`]: tweet-level and user-level concatenation of text and interaction vectors
//! - [`model`]: RBF-kernel SVM, majority voting and trivial baselines
//! - [`eval_report`]: cross-validation, transfer evaluation, metrics, t-SNE and reports
//! - [`pipeline`] and [`config`]: feature assembly and run configuration for the CLI

pub mod config;
pub mod corpus;
pub mod error;
pub mod eval_report;
pub mod fusion;
pub mod graph_embeddings;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod sgns;
pub mod text_features;
pub mod vectors_io;

pub use error::{Error, Result};
