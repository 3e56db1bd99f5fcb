//! Tweet- and user-level text vectors.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cbow::WordEmbeddingModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Tfidf,
    Static,
    ContextualSos,
    ContextualAvg,
    ContextualMax,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Tfidf => "tfidf",
            Provenance::Static => "static",
            Provenance::ContextualSos => "contextual-sos",
            Provenance::ContextualAvg => "contextual-avg",
            Provenance::ContextualMax => "contextual-max",
        })
    }
}

/// A text representation of one tweet or one user.
#[derive(Debug, Clone, PartialEq)]
pub struct TextVector {
    pub owner: String,
    pub vector: Vec<f64>,
    pub provenance: Provenance,
    /// No usable text: the vector is all zeros.
    pub absent: bool,
}

pub type TweetVector = TextVector;
pub type UserTextVector = TextVector;

impl TextVector {
    pub fn absent(owner: impl Into<String>, dim: usize, provenance: Provenance) -> Self {
        TextVector {
            owner: owner.into(),
            vector: vec![0.0; dim],
            provenance,
            absent: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Mean of the input vectors of in-vocabulary tokens.
pub fn embed_tweet_static<S: AsRef<str>>(model: &WordEmbeddingModel, owner: &str, tokens: &[S]) -> TweetVector {
    let mut sum = vec![0.0; model.dim];
    let mut n = 0usize;
    for tok in tokens {
        if let Some(v) = model.vector(tok.as_ref()) {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            n += 1;
        }
    }
    if n == 0 {
        return TextVector::absent(owner, model.dim, Provenance::Static);
    }
    sum.iter_mut().for_each(|s| *s /= n as f64);
    TextVector {
        owner: owner.to_string(),
        vector: sum,
        provenance: Provenance::Static,
        absent: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Start-of-sequence token row.
    Sos,
    Average,
    MaxPool,
}

impl Pooling {
    pub fn provenance(self) -> Provenance {
        match self {
            Pooling::Sos => Provenance::ContextualSos,
            Pooling::Average => Provenance::ContextualAvg,
            Pooling::MaxPool => Provenance::ContextualMax,
        }
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sos" | "cls" => Ok(Pooling::Sos),
            "avg" | "average" | "mean" => Ok(Pooling::Average),
            "max" | "maxpool" | "max-pool" => Ok(Pooling::MaxPool),
            other => Err(Error::Config(format!("unknown pooling strategy `{other}`"))),
        }
    }
}

/// Per-token contextual vectors of one tweet; row 0 is the start-of-sequence token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualTweetTokens {
    pub tweet_id: String,
    pub dim: usize,
    pub tokens: Vec<Vec<f64>>,
}

impl ContextualTweetTokens {
    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::Empty(format!("tweet `{}` has no token vectors", self.tweet_id)));
        }
        for row in &self.tokens {
            if row.len() != self.dim {
                return Err(Error::Dimension {
                    expected: self.dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("tweet `{}` has non-finite token values", self.tweet_id)));
            }
        }
        Ok(())
    }
}

/// Reads a token-vector JSONL file, validating every line.
pub fn load_contextual(path: &Path) -> Result<Vec<ContextualTweetTokens>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ctk: ContextualTweetTokens =
            serde_json::from_str(&line).map_err(|e| Error::parse(&name, i + 1, e.to_string()))?;
        ctk.validate().map_err(|e| Error::parse(&name, i + 1, e.to_string()))?;
        out.push(ctk);
    }
    Ok(out)
}

pub fn pool_contextual(ctk: &ContextualTweetTokens, strategy: Pooling) -> Result<TweetVector> {
    ctk.validate()?;
    let rows = &ctk.tokens;
    let vector = match strategy {
        Pooling::Sos => rows[0].clone(),
        Pooling::Average => {
            let mut sum = vec![0.0; ctk.dim];
            for row in rows {
                sum.iter_mut().zip(row).for_each(|(s, x)| *s += x);
            }
            sum.into_iter().map(|s| s / rows.len() as f64).collect()
        }
        Pooling::MaxPool => (0..ctk.dim)
            .map(|c| rows.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max))
            .collect(),
    };
    Ok(TextVector {
        owner: ctk.tweet_id.clone(),
        vector,
        provenance: strategy.provenance(),
        absent: false,
    })
}

/// Mean of a user's tweet vectors. Tweets without usable text are skipped;
/// a user with none left gets an absent zero vector of `dim`.
pub fn user_text_vector(owner: &str, tweets: &[TweetVector], dim: usize, provenance: Provenance) -> Result<UserTextVector> {
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    for t in tweets {
        if t.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: t.dim(),
            });
        }
        if t.absent {
            continue;
        }
        sum.iter_mut().zip(&t.vector).for_each(|(s, x)| *s += x);
        n += 1;
    }
    if n == 0 {
        return Ok(TextVector::absent(owner, dim, provenance));
    }
    sum.iter_mut().for_each(|s| *s /= n as f64);
    Ok(TextVector {
        owner: owner.to_string(),
        vector: sum,
        provenance,
        absent: false,
    })
}

/// `[tweet ‖ user]` with the split point and both provenance tags.
#[derive(Debug, Clone, PartialEq)]
pub struct TweetUserVector {
    pub vector: Vec<f64>,
    pub split: usize,
    pub provenance: (Provenance, Provenance),
}

impl TweetUserVector {
    pub fn tweet_part(&self) -> &[f64] {
        &self.vector[..self.split]
    }

    pub fn user_part(&self) -> &[f64] {
        &self.vector[self.split..]
    }
}

pub fn concat_tweet_user(
    tweet: &TweetVector,
    user: &UserTextVector,
    tweet_dim: usize,
    user_dim: usize,
) -> Result<TweetUserVector> {
    if tweet.dim() != tweet_dim {
        return Err(Error::Dimension {
            expected: tweet_dim,
            got: tweet.dim(),
        });
    }
    if user.dim() != user_dim {
        return Err(Error::Dimension {
            expected: user_dim,
            got: user.dim(),
        });
    }
    if tweet.provenance != user.provenance {
        return Err(Error::Config(format!(
            "cannot concatenate {} tweet vector with {} user vector",
            tweet.provenance, user.provenance
        )));
    }
    let mut vector = Vec::with_capacity(tweet_dim + user_dim);
    vector.extend_from_slice(&tweet.vector);
    vector.extend_from_slice(&user.vector);
    Ok(TweetUserVector {
        vector,
        split: tweet_dim,
        provenance: (tweet.provenance, user.provenance),
    })
}
