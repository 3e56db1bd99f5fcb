use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use htim_core::config::{Method, RunConfig, TextFeaturizer};
use htim_core::corpus::{
    apply_derived_tiers, filter_and_quota, load_region, save_region, synth_region, EngagementTier, PartyLabel, Quotas,
    RegionDataset, RegionPaths, SynthConfig,
};
use htim_core::eval_report::{emit_report, tsne_project, write_projection_svg, ReportPaths, TsneConfig};
use htim_core::fusion::{read_hybrid_csv, write_hybrid_csv, HybridRow};
use htim_core::graph_embeddings::{EmbeddingTable, GraphMethod};
use htim_core::model::train_svm;
use htim_core::pipeline::{assemble, kernel_config, provenance_of, run_experiment, train_graph, train_text, TextArtifacts};

use crate::{Cli, Command, ExperimentArgs, Failure};

type Outcome<T = ()> = Result<T, Failure>;

const HYBRID_CSV: &str = "hybrid.csv";
const MODEL_JSON: &str = "model.json";
const PROJECTION_SVG: &str = "projection.svg";

/// Config file, then `HTIM_*` variables, then flags. Flags travel the same
/// path as variables so they are parsed and validated identically.
fn load_config(cli: &Cli, exp: &ExperimentArgs) -> Outcome<RunConfig> {
    let mut pairs: Vec<(String, String)> = std::env::vars().filter(|(k, _)| k.starts_with("HTIM_")).collect();
    let mut flag = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            pairs.push((format!("HTIM_{key}"), v));
        }
    };
    flag("SEED", cli.seed.map(|s| s.to_string()));
    flag("THREADS", cli.threads.map(|t| t.to_string()));
    flag("METHOD", exp.method.clone());
    flag("TIER", exp.tier.clone());
    flag("LEVEL", exp.level.clone());
    flag("MODE", exp.mode.clone());
    flag("FOLDS", exp.folds.map(|f| f.to_string()));
    Ok(RunConfig::load(cli.config.as_deref(), pairs)?)
}

fn init_threads(cfg: &RunConfig) {
    let n = cfg.worker_threads();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        log::debug!("thread pool already initialised: {e}");
    }
}

fn load_data(dir: &Path) -> Outcome<RegionDataset> {
    let paths = RegionPaths::in_dir(dir);
    let missing = paths.missing();
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(|p| p.display().to_string()).collect();
        return Err(Failure::Data(format!(
            "region files missing: {}; run `htim ingest --from <raw dir>` or `htim synth` first",
            list.join(", ")
        )));
    }
    Ok(load_region(&paths)?)
}

fn require(path: &Path, producer: &str) -> Outcome {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Data(format!("{} not found; run `htim {producer}` first", path.display())))
    }
}

fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))
}

fn parts(cfg: &RunConfig) -> Outcome<(Option<GraphMethod>, TextFeaturizer)> {
    match cfg.method {
        Method::Features { graph, text } => Ok((graph, text)),
        m => Err(Failure::Usage(format!("`{m}` is a baseline and has no features to train"))),
    }
}

fn graph_path(out: &Path, method: GraphMethod) -> PathBuf {
    out.join(format!("graph_{}.vec", method.tag()))
}

pub fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Ingest { from } => {
            let cfg = load_config(&cli, &ExperimentArgs::default())?;
            let raw = load_data(from)?;
            let quotas = Quotas {
                member: cfg.member_quota,
                supporter: cfg.supporter_quota,
                sympathizer: cfg.sympathizer_quota,
            };
            let kept = filter_and_quota(&raw, &quotas);
            create_dir(&cli.data)?;
            save_region(&kept, &RegionPaths::in_dir(&cli.data))?;
            println!(
                "ingested {} users and {} of {} tweets into {}",
                kept.users.len(),
                kept.tweets.len(),
                raw.tweets.len(),
                cli.data.display()
            );
        }
        Command::DeriveTiers { threshold, max_per_party } => {
            let cfg = load_config(&cli, &ExperimentArgs::default())?;
            let ds = load_data(&cli.data)?;
            let derived = apply_derived_tiers(
                &ds,
                threshold.unwrap_or(cfg.supporter_threshold),
                max_per_party.unwrap_or(cfg.sympathizer_max),
            );
            save_region(&derived, &RegionPaths::in_dir(&cli.data))?;
            for tier in [EngagementTier::Member, EngagementTier::Supporter, EngagementTier::Sympathizer] {
                println!("{tier}: {}", derived.tier_users(tier).len());
            }
        }
        Command::Synth {
            parties,
            members,
            supporters,
            sympathizers,
            homophily,
            region,
        } => {
            let cfg = load_config(&cli, &ExperimentArgs::default())?;
            let base = SynthConfig::default();
            let synth = SynthConfig {
                n_parties: *parties,
                members_per_party: members.unwrap_or(base.members_per_party),
                supporters_per_party: supporters.unwrap_or(base.supporters_per_party),
                sympathizers_per_party: sympathizers.unwrap_or(base.sympathizers_per_party),
                homophily: homophily.unwrap_or(base.homophily),
                region: region.clone().unwrap_or(base.region.clone()),
                seed: cfg.seed,
                ..base
            };
            let ds = synth_region(&synth)?;
            create_dir(&cli.data)?;
            save_region(&ds, &RegionPaths::in_dir(&cli.data))?;
            println!(
                "wrote region {} ({} users, {} tweets, {} retweet edges) to {}",
                ds.region,
                ds.users.len(),
                ds.tweets.len(),
                ds.retweets.len(),
                cli.data.display()
            );
        }
        Command::TrainText(exp) => {
            let cfg = load_config(&cli, exp)?;
            init_threads(&cfg);
            let (_, text) = parts(&cfg)?;
            if text == TextFeaturizer::None {
                return Err(Failure::Usage(format!("method `{}` has no text featurizer", cfg.method)));
            }
            let ds = load_data(&cli.data)?;
            let artifacts = train_text(&ds, &cfg)?;
            create_dir(&cli.out)?;
            for path in artifacts.save(&cli.out)? {
                println!("{}", path.display());
            }
        }
        Command::TrainGraph(exp) => {
            let cfg = load_config(&cli, exp)?;
            init_threads(&cfg);
            let (Some(method), _) = parts(&cfg)? else {
                return Err(Failure::Usage(format!("method `{}` has no interaction embedding", cfg.method)));
            };
            let ds = load_data(&cli.data)?;
            let table = train_graph(&ds, &cfg)?.expect("graph method present");
            let path = graph_path(&cli.out, method);
            table.save(&path)?;
            println!("{}", path.display());
        }
        Command::Fuse(exp) => {
            let cfg = load_config(&cli, exp)?;
            let (graph, text) = parts(&cfg)?;
            let ds = load_data(&cli.data)?;
            let text_artifacts = match provenance_of(text) {
                None => TextArtifacts::none(),
                Some(tag) => {
                    require(&cli.out.join(format!("text_user_{tag}.vec")), "train-text")?;
                    TextArtifacts::load(&cli.out, text)?
                }
            };
            let table = match graph {
                Some(method) => {
                    let path = graph_path(&cli.out, method);
                    require(&path, "train-graph")?;
                    Some(EmbeddingTable::load(&path, method)?)
                }
                None => None,
            };
            let labelled: Vec<_> = ds.users.iter().filter(|u| u.party.is_some()).collect();
            let features = assemble(&cfg, &text_artifacts, table.as_ref(), &labelled)?;
            if !features.skipped.is_empty() {
                log::warn!("{} users have neither text nor interactions and were left out", features.skipped.len());
            }
            let path = cli.out.join(HYBRID_CSV);
            write_hybrid_csv(&path, &features.rows)?;
            println!("{} rows -> {}", features.rows.len(), path.display());
        }
        Command::TrainModel(exp) => {
            let cfg = load_config(&cli, exp)?;
            init_threads(&cfg);
            parts(&cfg)?;
            let ds = load_data(&cli.data)?;
            let path = cli.out.join(HYBRID_CSV);
            require(&path, "fuse")?;
            let rows = read_hybrid_csv(&path)?;
            let owner = row_owners(&ds);
            let (mut x, mut labels) = (Vec::new(), Vec::new());
            for row in rows {
                let Some(user) = owner.get(row.id.as_str()).and_then(|u| ds.user(u)) else { continue };
                if user.tier == Some(EngagementTier::Member) {
                    if let Some(party) = &user.party {
                        x.push(row.vector);
                        labels.push(party.clone());
                    }
                }
            }
            let model = train_svm(&x, &labels, &kernel_config(&cfg)?)?;
            let path = cli.out.join(MODEL_JSON);
            model.save(&path)?;
            println!("trained on {} rows -> {}", x.len(), path.display());
        }
        Command::Eval(exp) => {
            let cfg = load_config(&cli, exp)?;
            init_threads(&cfg);
            let ds = load_data(&cli.data)?;
            let experiment = run_experiment(&ds, &cfg)?;
            let paths = ReportPaths::in_dir(&cli.out);
            emit_report(&experiment.report, &paths)?;
            experiment.save_embeddings(&cli.out)?;
            let r = &experiment.report;
            println!("{} {} {}: macro-F1 {:.4}", cfg.method, r.tier, r.mode, r.macro_f1);
        }
        Command::Project(exp) => {
            let cfg = load_config(&cli, exp)?;
            let ds = load_data(&cli.data)?;
            let path = cli.out.join(HYBRID_CSV);
            require(&path, "fuse")?;
            let (ids, x, parties) = user_means(&ds, read_hybrid_csv(&path)?, cfg.tier);
            let projection = tsne_project(
                &ids,
                &x,
                &TsneConfig {
                    perplexity: cfg.tsne_perplexity,
                    iterations: cfg.tsne_iterations,
                    seed: cfg.seed,
                    ..TsneConfig::default()
                },
            )?;
            let svg = cli.out.join(PROJECTION_SVG);
            write_projection_svg(&svg, &projection, &parties)?;
            println!("{} users, KL {:.4} -> {}", ids.len(), projection.kl_final, svg.display());
        }
    }
    Ok(())
}

/// Maps hybrid.csv row ids (user ids at user level, tweet ids at tweet
/// level) to the owning user.
fn row_owners(ds: &RegionDataset) -> HashMap<&str, &str> {
    let mut owner: HashMap<&str, &str> = ds.users.iter().map(|u| (u.user_id.as_str(), u.user_id.as_str())).collect();
    for u in &ds.users {
        for t in &u.tweet_ids {
            owner.insert(t.as_str(), u.user_id.as_str());
        }
    }
    owner
}

/// One vector per user of `tier`: the mean of that user's rows.
fn user_means(
    ds: &RegionDataset,
    rows: Vec<HybridRow>,
    tier: EngagementTier,
) -> (Vec<String>, Vec<Vec<f64>>, BTreeMap<String, PartyLabel>) {
    let owner = row_owners(ds);
    let mut sums: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    let mut parties = BTreeMap::new();
    for row in rows {
        let Some(user) = owner.get(row.id.as_str()).and_then(|u| ds.user(u)) else { continue };
        if user.tier != Some(tier) {
            continue;
        }
        let Some(party) = &user.party else { continue };
        parties.insert(user.user_id.clone(), party.clone());
        let entry = sums.entry(user.user_id.clone()).or_insert_with(|| (vec![0.0; row.vector.len()], 0));
        entry.0.iter_mut().zip(&row.vector).for_each(|(s, v)| *s += v);
        entry.1 += 1;
    }
    let (ids, x) = sums
        .into_iter()
        .map(|(id, (sum, n))| (id, sum.into_iter().map(|s| s / n as f64).collect()))
        .unzip();
    (ids, x, parties)
}
