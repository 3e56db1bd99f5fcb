//! Run configuration: a flat key/value TOML file, `HTIM_*` environment
//! overrides on top, command-line flags on top of that.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::EngagementTier;
use crate::error::{Error, Result};
use crate::eval_report::Aggregate;
use crate::graph_embeddings::{GraphMethod, RelationalOutput};
use crate::model::{Gamma, Multiclass};
use crate::text_features::Pooling;

pub const ENV_PREFIX: &str = "HTIM_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TextFeaturizer {
    None,
    Tfidf,
    Word2Vec,
    Contextual(Pooling),
}

impl TextFeaturizer {
    /// Featurizers that produce one vector per tweet.
    pub fn is_tweet_level(self) -> bool {
        matches!(self, TextFeaturizer::Word2Vec | TextFeaturizer::Contextual(_))
    }
}

impl fmt::Display for TextFeaturizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextFeaturizer::None => f.write_str("none"),
            TextFeaturizer::Tfidf => f.write_str("tfidf"),
            TextFeaturizer::Word2Vec => f.write_str("w2v"),
            TextFeaturizer::Contextual(Pooling::Sos) => f.write_str("contextual:sos"),
            TextFeaturizer::Contextual(Pooling::Average) => f.write_str("contextual:avg"),
            TextFeaturizer::Contextual(Pooling::MaxPool) => f.write_str("contextual:max"),
        }
    }
}

impl FromStr for TextFeaturizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TextFeaturizer::None),
            "tfidf" => Ok(TextFeaturizer::Tfidf),
            "w2v" | "word2vec" => Ok(TextFeaturizer::Word2Vec),
            "contextual" => Ok(TextFeaturizer::Contextual(Pooling::Average)),
            _ => match s.strip_prefix("contextual:") {
                Some(p) => Ok(TextFeaturizer::Contextual(p.parse()?)),
                None => Err(Error::Config(format!("unknown text featurizer `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionLevel {
    Tweet,
    User,
}

impl FromStr for FusionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tweet" => Ok(FusionLevel::Tweet),
            "user" => Ok(FusionLevel::User),
            other => Err(Error::Config(format!("unknown fusion level `{other}` (tweet|user)"))),
        }
    }
}

/// What to classify with: a combination like `re+tfidf`, or a trivial baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Features { graph: Option<GraphMethod>, text: TextFeaturizer },
    Majority,
    Random,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Majority => f.write_str("majority"),
            Method::Random => f.write_str("random"),
            Method::Features { graph, text } => match (graph, text) {
                (Some(g), TextFeaturizer::None) => write!(f, "{g}"),
                (Some(g), t) => write!(f, "{g}+{t}"),
                (None, t) => write!(f, "{t}"),
            },
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => return Ok(Method::Majority),
            "random" => return Ok(Method::Random),
            _ => {}
        }
        let mut graph = None;
        let mut text = None;
        for part in s.split('+') {
            if let Ok(g) = part.parse::<GraphMethod>() {
                if graph.replace(g).is_some() {
                    return Err(Error::Config(format!("method `{s}` names two graph methods")));
                }
            } else if let Ok(t) = part.parse::<TextFeaturizer>() {
                if text.replace(t).is_some() {
                    return Err(Error::Config(format!("method `{s}` names two text featurizers")));
                }
            } else {
                return Err(Error::Config(format!("unknown method component `{part}` in `{s}`")));
            }
        }
        let text = text.unwrap_or(TextFeaturizer::None);
        if graph.is_none() && text == TextFeaturizer::None {
            return Err(Error::Config("a method needs a graph method, a text featurizer, or both".into()));
        }
        Ok(Method::Features { graph, text })
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Cv,
    Transfer,
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cv" => Ok(EvalMode::Cv),
            "transfer" => Ok(EvalMode::Transfer),
            other => Err(Error::Config(format!("unknown eval mode `{other}` (cv|transfer)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    /// Derived from the text featurizer when unset.
    pub level: Option<FusionLevel>,
    pub text_dim: usize,
    pub graph_dim: usize,
    /// ContextualTweetTokens JSONL for `contextual:*` featurizers.
    pub contextual_tokens: Option<PathBuf>,
    pub tfidf_normalize: bool,
    pub w2v_epochs: usize,
    pub w2v_window: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub walk_window: usize,
    pub walk_epochs: usize,
    pub p: f64,
    /// In-out parameter for node2vec; DeepWalk always uses 1.
    pub q: f64,
    pub re_epochs: usize,
    pub re_negatives: usize,
    pub re_output: RelationalOutput,
    pub normalize_segments: bool,
    pub svm_c: f64,
    pub svm_gamma: String,
    pub svm_tol: f64,
    pub svm_max_iter: usize,
    pub multiclass: Multiclass,
    pub standardize: bool,
    pub tier: EngagementTier,
    /// Defaults to `cv` for Members and `transfer` otherwise.
    pub mode: Option<EvalMode>,
    pub folds: usize,
    pub aggregate: Aggregate,
    pub supporter_threshold: usize,
    pub sympathizer_max: usize,
    pub member_quota: usize,
    pub supporter_quota: usize,
    pub sympathizer_quota: usize,
    pub tsne_perplexity: f64,
    pub tsne_iterations: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core. 1 makes every artifact reproducible.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::Features {
                graph: Some(GraphMethod::Relational),
                text: TextFeaturizer::Tfidf,
            },
            level: None,
            text_dim: 300,
            graph_dim: 20,
            contextual_tokens: None,
            tfidf_normalize: true,
            w2v_epochs: 5,
            w2v_window: 5,
            walks_per_node: 10,
            walk_length: 80,
            walk_window: 10,
            walk_epochs: 1,
            p: 1.0,
            q: 0.5,
            re_epochs: 5,
            re_negatives: 5,
            re_output: RelationalOutput::Source,
            normalize_segments: false,
            svm_c: 1.0,
            svm_gamma: "scale".into(),
            svm_tol: 1e-3,
            svm_max_iter: 10_000_000,
            multiclass: Multiclass::Ovo,
            standardize: false,
            tier: EngagementTier::Member,
            mode: None,
            folds: 10,
            aggregate: Aggregate::Pooled,
            supporter_threshold: 5,
            sympathizer_max: 2,
            member_quota: 120,
            supporter_quota: 60,
            sympathizer_quota: 60,
            tsne_perplexity: 30.0,
            tsne_iterations: 1000,
            seed: 1,
            threads: 0,
        }
    }
}

/// Reads a bare value the way TOML would, falling back to a string.
fn env_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl RunConfig {
    /// File values (if any), then `HTIM_*` variables from `env`, then validation.
    pub fn load(file: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<RunConfig> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?
            }
            None => toml::Table::new(),
        };
        for (key, raw) in env {
            if let Some(name) = key.strip_prefix(ENV_PREFIX) {
                table.insert(name.to_ascii_lowercase(), env_value(&raw));
            }
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn gamma(&self) -> Result<Gamma> {
        self.svm_gamma.parse()
    }

    pub fn fusion_level(&self) -> FusionLevel {
        match (self.level, self.method) {
            (Some(level), _) => level,
            (None, Method::Features { text, .. }) if text.is_tweet_level() => FusionLevel::Tweet,
            _ => FusionLevel::User,
        }
    }

    pub fn eval_mode(&self) -> EvalMode {
        self.mode.unwrap_or(if self.tier == EngagementTier::Member {
            EvalMode::Cv
        } else {
            EvalMode::Transfer
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let Method::Features { text, .. } = self.method {
            match (self.fusion_level(), text.is_tweet_level()) {
                (FusionLevel::User, true) => {
                    return Err(Error::Config(format!("fusion level `user` needs a user-level text featurizer, not `{text}`")))
                }
                (FusionLevel::Tweet, false) => {
                    return Err(Error::Config(format!("fusion level `tweet` needs a tweet-level text featurizer, not `{text}`")))
                }
                _ => {}
            }
            if matches!(text, TextFeaturizer::Contextual(_)) && self.contextual_tokens.is_none() {
                return Err(Error::Config("contextual featurizers need `contextual_tokens`".into()));
            }
        }
        if self.text_dim == 0 || self.graph_dim == 0 {
            return Err(Error::Config("text_dim and graph_dim must be positive".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if !(self.p > 0.0 && self.q > 0.0) {
            return Err(Error::Config("p and q must be positive".into()));
        }
        if [self.walks_per_node, self.walk_length, self.walk_window, self.walk_epochs, self.re_epochs, self.w2v_epochs, self.w2v_window]
            .contains(&0)
        {
            return Err(Error::Config("walk, window and epoch settings must be positive".into()));
        }
        if !(self.tsne_perplexity > 0.0) || self.tsne_iterations == 0 {
            return Err(Error::Config("t-SNE perplexity and iterations must be positive".into()));
        }
        self.gamma()?;
        if !(self.svm_c > 0.0) || !(self.svm_tol > 0.0) || self.svm_max_iter == 0 {
            return Err(Error::Config("svm_c, svm_tol and svm_max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Thread count with 0 resolved to the machine's parallelism.
    pub fn worker_threads(&self) -> usize {
        match self.threads {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        }
    }

    /// Experiment parameters as flat strings for report provenance. Paths are
    /// left out so that the same experiment echoes the same way anywhere.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let table = toml::Table::try_from(self).expect("config serialises");
        table
            .into_iter()
            .filter(|(k, _)| k != "contextual_tokens")
            .map(|(k, v)| {
                let s = match v {
                    toml::Value::String(s) => s,
                    other => other.to_string(),
                };
                (k, s)
            })
            .collect()
    }
}
