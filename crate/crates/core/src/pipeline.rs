//! Feature assembly and end-to-end experiments over one region.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{EvalMode, FusionLevel, Method, RunConfig, TextFeaturizer};
use crate::corpus::{EngagementTier, RegionDataset, UserRecord};
use crate::error::{Error, Result};
use crate::eval_report::{run_cv, run_transfer, CvOptions, EvalReport, Instance, LabeledUser};
use crate::fusion::{fuse_tweet_level, fuse_user_level, FusionOptions, HybridRow};
use crate::graph_embeddings::{
    build_graph, deepwalk, node2vec, train_relational, EmbeddingTable, GraphMethod, Lookup, RelationalConfig, WalkConfig,
};
use crate::model::{KernelConfig, Learner, MajorityLearner, RandomLearner, SvmLearner};
use crate::text_features::{
    embed_tweet_static, fit_tfidf, load_contextual, pool_contextual, tokenize, train_cbow, user_text_vector, CbowConfig, Provenance,
    TextVector, TfidfModel, WordEmbeddingModel,
};
use crate::vectors_io;

/// Trained text representations for every user (and tweet, when tweet-level).
#[derive(Debug, Clone)]
pub struct TextArtifacts {
    pub featurizer: TextFeaturizer,
    pub dim: usize,
    pub provenance: Provenance,
    pub tfidf: Option<TfidfModel>,
    pub words: Option<WordEmbeddingModel>,
    pub tweets: HashMap<String, TextVector>,
    pub users: BTreeMap<String, TextVector>,
}

impl TextArtifacts {
    pub fn none() -> Self {
        TextArtifacts {
            featurizer: TextFeaturizer::None,
            dim: 0,
            provenance: Provenance::Tfidf,
            tfidf: None,
            words: None,
            tweets: HashMap::new(),
            users: BTreeMap::new(),
        }
    }

    pub fn user(&self, user_id: &str) -> TextVector {
        self.users
            .get(user_id)
            .cloned()
            .unwrap_or_else(|| TextVector::absent(user_id, self.dim, self.provenance))
    }

    /// Writes user vectors (and tweet vectors, if any) in the `<count> <dim>` format.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        if self.featurizer == TextFeaturizer::None {
            return Ok(written);
        }
        let tag = self.provenance.to_string();
        let users: Vec<&TextVector> = self.users.values().collect();
        let path = dir.join(format!("text_user_{tag}.vec"));
        write_text_vectors(&path, &users, self.dim)?;
        written.push(path);
        if !self.tweets.is_empty() {
            let mut tweets: Vec<&TextVector> = self.tweets.values().collect();
            tweets.sort_by(|a, b| a.owner.cmp(&b.owner));
            let path = dir.join(format!("text_tweet_{tag}.vec"));
            write_text_vectors(&path, &tweets, self.dim)?;
            written.push(path);
        }
        if let Some(words) = &self.words {
            let path = dir.join("w2v.vec");
            words.export(&path)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Tag used in saved text-vector file names; `None` for no featurizer.
pub fn provenance_of(featurizer: TextFeaturizer) -> Option<Provenance> {
    match featurizer {
        TextFeaturizer::None => None,
        TextFeaturizer::Tfidf => Some(Provenance::Tfidf),
        TextFeaturizer::Word2Vec => Some(Provenance::Static),
        TextFeaturizer::Contextual(pooling) => Some(pooling.provenance()),
    }
}

fn read_text_vectors(path: &Path, provenance: Provenance) -> Result<(usize, Vec<TextVector>)> {
    let (ids, dim, data) = vectors_io::read_vectors(path)?;
    let vectors = ids
        .into_iter()
        .zip(data.chunks(dim.max(1)))
        .map(|(owner, row)| TextVector {
            owner,
            absent: row.iter().all(|&v| v == 0.0),
            vector: row.to_vec(),
            provenance,
        })
        .collect();
    Ok((dim, vectors))
}

impl TextArtifacts {
    /// Reads vectors written by [`TextArtifacts::save`]. All-zero rows come
    /// back as absent; fitted models are not restored.
    pub fn load(dir: &Path, featurizer: TextFeaturizer) -> Result<Self> {
        let Some(provenance) = provenance_of(featurizer) else {
            return Ok(TextArtifacts::none());
        };
        let tag = provenance.to_string();
        let (dim, users) = read_text_vectors(&dir.join(format!("text_user_{tag}.vec")), provenance)?;
        let mut tweets = HashMap::new();
        if featurizer.is_tweet_level() {
            let path = dir.join(format!("text_tweet_{tag}.vec"));
            let (tweet_dim, rows) = read_text_vectors(&path, provenance)?;
            if tweet_dim != dim {
                return Err(Error::Dimension { expected: dim, got: tweet_dim });
            }
            tweets = rows.into_iter().map(|t| (t.owner.clone(), t)).collect();
        }
        Ok(TextArtifacts {
            featurizer,
            dim,
            provenance,
            tfidf: None,
            words: None,
            tweets,
            users: users.into_iter().map(|u| (u.owner.clone(), u)).collect(),
        })
    }
}

fn write_text_vectors(path: &Path, vectors: &[&TextVector], dim: usize) -> Result<()> {
    let ids: Vec<String> = vectors.iter().map(|v| v.owner.clone()).collect();
    let data: Vec<f64> = vectors.iter().flat_map(|v| v.vector.iter().copied()).collect();
    vectors_io::write_vectors(path, &ids, dim, &data)
}

fn user_tokens(dataset: &RegionDataset, user: &UserRecord, index: &HashMap<&str, &crate::corpus::Tweet>) -> Vec<String> {
    dataset
        .tweets_of(index, user)
        .into_iter()
        .flat_map(|t| tokenize(&t.text))
        .collect()
}

/// TF-IDF is fit on Member documents (one document per user); word vectors
/// are trained on every retained tweet of the region.
pub fn train_text(dataset: &RegionDataset, cfg: &RunConfig) -> Result<TextArtifacts> {
    let featurizer = match cfg.method {
        Method::Features { text, .. } => text,
        _ => TextFeaturizer::None,
    };
    let index = dataset.tweet_index();
    match featurizer {
        TextFeaturizer::None => Ok(TextArtifacts::none()),
        TextFeaturizer::Tfidf => {
            let docs: Vec<(String, Vec<String>)> = dataset
                .users
                .iter()
                .map(|u| (u.user_id.clone(), user_tokens(dataset, u, &index)))
                .collect();
            let member_docs: Vec<Vec<String>> = dataset
                .users
                .iter()
                .zip(&docs)
                .filter(|(u, (_, d))| u.tier == Some(EngagementTier::Member) && !d.is_empty())
                .map(|(_, (_, d))| d.clone())
                .collect();
            let vocab_size = crate::text_features::Vocabulary::build(&member_docs).len();
            let dim = cfg.text_dim.min(vocab_size);
            if dim < cfg.text_dim {
                log::warn!("member vocabulary has {vocab_size} terms; TF-IDF dimension reduced from {}", cfg.text_dim);
            }
            let model = fit_tfidf(&member_docs, dim, cfg.tfidf_normalize)?;
            let users = docs
                .into_iter()
                .map(|(id, doc)| {
                    let vector = model.transform(&doc);
                    let absent = vector.iter().all(|&v| v == 0.0);
                    let tv = TextVector {
                        owner: id.clone(),
                        vector,
                        provenance: Provenance::Tfidf,
                        absent,
                    };
                    (id, tv)
                })
                .collect();
            Ok(TextArtifacts {
                featurizer,
                dim,
                provenance: Provenance::Tfidf,
                tfidf: Some(model),
                words: None,
                tweets: HashMap::new(),
                users,
            })
        }
        TextFeaturizer::Word2Vec => {
            let sentences: Vec<Vec<String>> = dataset.tweets.iter().map(|t| tokenize(&t.text)).collect();
            let cbow = CbowConfig {
                dim: cfg.text_dim,
                window: cfg.w2v_window,
                epochs: cfg.w2v_epochs,
                seed: cfg.seed,
                threads: cfg.worker_threads(),
                ..CbowConfig::default()
            };
            let words = train_cbow(&sentences, &cbow)?;
            let tweets: HashMap<String, TextVector> = dataset
                .tweets
                .iter()
                .zip(&sentences)
                .map(|(t, toks)| (t.tweet_id.clone(), embed_tweet_static(&words, &t.tweet_id, toks)))
                .collect();
            let users = user_vectors(dataset, &tweets, cfg.text_dim, Provenance::Static)?;
            Ok(TextArtifacts {
                featurizer,
                dim: cfg.text_dim,
                provenance: Provenance::Static,
                tfidf: None,
                words: Some(words),
                tweets,
                users,
            })
        }
        TextFeaturizer::Contextual(pooling) => {
            let path = cfg
                .contextual_tokens
                .as_deref()
                .ok_or_else(|| Error::Config("contextual featurizers need `contextual_tokens`".into()))?;
            let records = load_contextual(path)?;
            let dim = records
                .first()
                .map(|r| r.dim)
                .ok_or_else(|| Error::Empty(format!("{} holds no token records", path.display())))?;
            let mut tweets = HashMap::new();
            for r in &records {
                if r.dim != dim {
                    return Err(Error::Dimension { expected: dim, got: r.dim });
                }
                tweets.insert(r.tweet_id.clone(), pool_contextual(r, pooling)?);
            }
            let missing = dataset.tweets.iter().filter(|t| !tweets.contains_key(&t.tweet_id)).count();
            if missing > 0 {
                log::warn!("{missing} retained tweets have no contextual token vectors");
            }
            let users = user_vectors(dataset, &tweets, dim, pooling.provenance())?;
            Ok(TextArtifacts {
                featurizer,
                dim,
                provenance: pooling.provenance(),
                tfidf: None,
                words: None,
                tweets,
                users,
            })
        }
    }
}

fn user_vectors(
    dataset: &RegionDataset,
    tweets: &HashMap<String, TextVector>,
    dim: usize,
    provenance: Provenance,
) -> Result<BTreeMap<String, TextVector>> {
    dataset
        .users
        .iter()
        .map(|u| {
            let own: Vec<TextVector> = u.tweet_ids.iter().filter_map(|id| tweets.get(id).cloned()).collect();
            Ok((u.user_id.clone(), user_text_vector(&u.user_id, &own, dim, provenance)?))
        })
        .collect()
}

/// Interaction embeddings over the full retweet graph of the region.
pub fn train_graph(dataset: &RegionDataset, cfg: &RunConfig) -> Result<Option<EmbeddingTable>> {
    let method = match cfg.method {
        Method::Features { graph: Some(g), .. } => g,
        _ => return Ok(None),
    };
    let graph = build_graph(&dataset.retweets)?;
    let walk = WalkConfig {
        walks_per_node: cfg.walks_per_node,
        walk_length: cfg.walk_length,
        window: cfg.walk_window,
        epochs: cfg.walk_epochs,
        p: cfg.p,
        q: cfg.q,
        seed: cfg.seed,
    };
    let threads = cfg.worker_threads();
    let table = match method {
        GraphMethod::DeepWalk => deepwalk(&graph, &walk, cfg.graph_dim, threads)?,
        GraphMethod::Node2Vec => node2vec(&graph, &walk, cfg.graph_dim, threads)?,
        GraphMethod::Relational => train_relational(
            &graph,
            &RelationalConfig {
                dim: cfg.graph_dim,
                negatives: cfg.re_negatives,
                epochs: cfg.re_epochs,
                output: cfg.re_output,
                seed: cfg.seed,
                threads,
                ..RelationalConfig::default()
            },
        )?,
    };
    Ok(Some(table))
}

/// Hybrid features for a set of labelled users.
#[derive(Debug, Clone, Default)]
pub struct FeatureSet {
    pub users: Vec<LabeledUser>,
    /// One row per instance, for the audit dump.
    pub rows: Vec<HybridRow>,
    /// Users with neither text nor interaction data.
    pub skipped: Vec<String>,
}

pub fn assemble(
    cfg: &RunConfig,
    text: &TextArtifacts,
    graph: Option<&EmbeddingTable>,
    users: &[&UserRecord],
) -> Result<FeatureSet> {
    let opts = FusionOptions {
        normalize_segments: cfg.normalize_segments,
    };
    let level = cfg.fusion_level();
    let mut out = FeatureSet::default();
    for u in users {
        let Some(label) = u.party.clone() else { continue };
        let interaction = match graph {
            Some(g) => g.lookup(&u.user_id),
            None => Lookup {
                vector: Vec::new(),
                absent: true,
            },
        };
        let user_text = text.user(&u.user_id);
        let text_missing = text.dim == 0 || user_text.absent;
        if text_missing && (interaction.absent || interaction.vector.is_empty()) {
            out.skipped.push(u.user_id.clone());
            continue;
        }
        let instances = match level {
            FusionLevel::User => {
                let f = fuse_user_level(&user_text, &interaction, opts)?;
                out.rows.push(HybridRow::from(&f));
                vec![Instance {
                    id: u.user_id.clone(),
                    vector: f.vector,
                }]
            }
            FusionLevel::Tweet => {
                let mut tweets: Vec<&TextVector> = u.tweet_ids.iter().filter_map(|id| text.tweets.get(id)).collect();
                let placeholder;
                if tweets.is_empty() {
                    placeholder = TextVector::absent(u.user_id.clone(), text.dim, text.provenance);
                    tweets.push(&placeholder);
                }
                let mut instances = Vec::with_capacity(tweets.len());
                for t in tweets {
                    let f = fuse_tweet_level(t, &user_text, &interaction, &u.user_id, opts)?;
                    out.rows.push(HybridRow::from(&f));
                    instances.push(Instance {
                        id: f.tweet_id,
                        vector: f.vector,
                    });
                }
                instances
            }
        };
        out.users.push(LabeledUser {
            user_id: u.user_id.clone(),
            label,
            instances,
        });
    }
    Ok(out)
}

pub fn kernel_config(cfg: &RunConfig) -> Result<KernelConfig> {
    Ok(KernelConfig {
        c: cfg.svm_c,
        gamma: cfg.gamma()?,
        tol: cfg.svm_tol,
        max_iter: cfg.svm_max_iter,
        multiclass: cfg.multiclass,
        standardize: cfg.standardize,
        ..KernelConfig::default()
    })
}

fn learner(cfg: &RunConfig) -> Result<Box<dyn Learner>> {
    Ok(match cfg.method {
        Method::Majority => Box::new(MajorityLearner),
        Method::Random => Box::new(RandomLearner),
        Method::Features { .. } => Box::new(SvmLearner(kernel_config(cfg)?)),
    })
}

fn baseline_users(users: &[&UserRecord]) -> Vec<LabeledUser> {
    users
        .iter()
        .filter_map(|u| Some(LabeledUser::single(u.user_id.clone(), u.party.clone()?, Vec::new())))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: EvalReport,
    pub text: TextArtifacts,
    pub graph: Option<EmbeddingTable>,
    pub features: FeatureSet,
}

impl Experiment {
    /// Writes the trained embeddings next to the report.
    pub fn save_embeddings(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = self.text.save(dir)?;
        if let Some(g) = &self.graph {
            let path = dir.join(format!("graph_{}.vec", g.method.tag()));
            g.save(&path)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Trains the configured representations, then evaluates by cross-validation
/// on `cfg.tier` or by Member-to-tier transfer.
pub fn run_experiment(dataset: &RegionDataset, cfg: &RunConfig) -> Result<Experiment> {
    cfg.validate()?;
    let start = Instant::now();
    let mode = cfg.eval_mode();
    let train_users = dataset.tier_users(EngagementTier::Member);
    let test_users = dataset.tier_users(cfg.tier);
    if test_users.is_empty() {
        return Err(Error::Empty(format!("no labelled {} users in region {}", cfg.tier, dataset.region)));
    }

    let (text, graph) = match cfg.method {
        Method::Features { .. } => (train_text(dataset, cfg)?, train_graph(dataset, cfg)?),
        _ => (TextArtifacts::none(), None),
    };
    let build = |users: &[&UserRecord]| -> Result<FeatureSet> {
        match cfg.method {
            Method::Features { .. } => assemble(cfg, &text, graph.as_ref(), users),
            _ => Ok(FeatureSet {
                users: baseline_users(users),
                ..FeatureSet::default()
            }),
        }
    };
    let learner = learner(cfg)?;
    let test = build(&test_users)?;
    let outcome = match mode {
        EvalMode::Cv => run_cv(
            &test.users,
            learner.as_ref(),
            &CvOptions {
                k: cfg.folds,
                seed: cfg.seed,
                aggregate: cfg.aggregate,
            },
        )?,
        EvalMode::Transfer => {
            let train = build(&train_users)?;
            if !train.skipped.is_empty() {
                log::warn!("{} Members have no features and are left out of training", train.skipped.len());
            }
            run_transfer(&train.users, &test.users, learner.as_ref(), cfg.seed)?
        }
    };
    let mode_tag = match mode {
        EvalMode::Cv => "cv",
        EvalMode::Transfer => "transfer",
    };
    let mut report = EvalReport::new(outcome, cfg.tier.as_str(), mode_tag, cfg.echo(), cfg.seed);
    report.skipped_users = test.skipped.clone();
    if cfg.worker_threads() > 1 {
        report.runtime_s = Some(start.elapsed().as_secs_f64());
    }
    Ok(Experiment {
        report,
        text,
        graph,
        features: test,
    })
}
