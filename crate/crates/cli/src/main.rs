use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "htim", version, about = "Hybrid text and interaction features for multi-party political leaning inference")]
struct Cli {
    /// TOML run configuration. `HTIM_<KEY>` environment variables override
    /// it and command-line flags override both.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads, 0 for every core. `--threads 1` makes all artifacts
    /// byte-for-byte reproducible.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Region directory: labels.csv, tweets.jsonl, retweets.tsv, follows.tsv.
    #[arg(long, global = true, default_value = "data", value_name = "DIR")]
    data: PathBuf,

    /// Directory for trained vectors, hybrid.csv, model.json and reports.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default, Clone)]
struct ExperimentArgs {
    /// Feature method: `<graph>+<text>`, either part alone, `majority` or
    /// `random`. Graph: re, dw, n2v. Text: tfidf, w2v, contextual:{sos,avg,max}.
    #[arg(long)]
    method: Option<String>,

    /// Evaluated tier: member, supporter or sympathizer.
    #[arg(long)]
    tier: Option<String>,

    /// Fusion level: tweet or user. Follows the text featurizer when omitted.
    #[arg(long)]
    level: Option<String>,

    /// cv or transfer. Members default to cv, other tiers to transfer.
    #[arg(long)]
    mode: Option<String>,

    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load raw region files, filter short tweets, apply per-tier quotas and
    /// write the canonical files to --data.
    Ingest {
        /// Directory holding the raw labels.csv, tweets.jsonl, retweets.tsv and follows.tsv.
        #[arg(long, value_name = "DIR")]
        from: PathBuf,
    },
    /// Relabel supporters and sympathizers from the follow graph.
    DeriveTiers {
        /// Minimum follows of one party's Members for a supporter.
        #[arg(long)]
        threshold: Option<usize>,
        /// Maximum follows of any party's Members for a sympathizer.
        #[arg(long)]
        max_per_party: Option<usize>,
    },
    /// Generate a synthetic region into --data.
    Synth {
        #[arg(long, default_value_t = 3)]
        parties: usize,
        #[arg(long)]
        members: Option<usize>,
        #[arg(long)]
        supporters: Option<usize>,
        #[arg(long)]
        sympathizers: Option<usize>,
        /// Probability that a retweet stays within the author's party.
        #[arg(long)]
        homophily: Option<f64>,
        #[arg(long)]
        region: Option<String>,
    },
    /// Train the text featurizer and write user (and tweet) vectors.
    TrainText(ExperimentArgs),
    /// Train the interaction embeddings on the retweet graph.
    TrainGraph(ExperimentArgs),
    /// Concatenate trained vectors into hybrid.csv for every labelled user.
    Fuse(ExperimentArgs),
    /// Fit the RBF SVM on the Members' rows of hybrid.csv.
    TrainModel(ExperimentArgs),
    /// Train and evaluate end to end; prints macro-F1 and writes report.json.
    Eval(ExperimentArgs),
    /// t-SNE projection of the tier's hybrid vectors to projection.svg.
    Project(ExperimentArgs),
}

/// Why a run stopped, and the exit code that reports it.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<htim_core::Error> for Failure {
    fn from(e: htim_core::Error) -> Self {
        match e {
            htim_core::Error::Config(_) => Failure::Usage(e.to_string()),
            e if e.is_numeric() => Failure::Numeric(e.to_string()),
            e => Failure::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
