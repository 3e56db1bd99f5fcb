//! Continuous bag-of-words word vectors with negative sampling.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::tfidf::Vocabulary;
use crate::error::{Error, Result};
use crate::rng;
use crate::sgns::{self, LinearDecay, NoiseSampler, ParamMatrix, Scratch, Step};
use crate::vectors_io;

#[derive(Debug, Clone, PartialEq)]
pub struct CbowConfig {
    pub dim: usize,
    /// Symmetric context window.
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub start_lr: f64,
    pub end_lr: f64,
    pub seed: u64,
    /// 1 gives bit-reproducible training; more threads update parameters
    /// concurrently without synchronisation.
    pub threads: usize,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            dim: 300,
            window: 5,
            epochs: 5,
            negatives: 5,
            start_lr: sgns::DEFAULT_START_LR,
            end_lr: sgns::DEFAULT_END_LR,
            seed: 1,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddingModel {
    pub vocab: Vocabulary,
    pub dim: usize,
    /// Input (word) vectors, `vocab.len() x dim`, row-major.
    pub input: Vec<f64>,
    /// Output (context) vectors, same shape.
    pub output: Vec<f64>,
    pub config: CbowConfig,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
}

impl WordEmbeddingModel {
    pub fn vector(&self, term: &str) -> Option<&[f64]> {
        let i = self.vocab.get(term)?;
        Some(&self.input[i * self.dim..(i + 1) * self.dim])
    }

    /// Writes the input vectors in the `<count> <dim>` text format.
    pub fn export(&self, path: &Path) -> Result<()> {
        vectors_io::write_vectors(path, &self.vocab.terms, self.dim, &self.input)
    }
}

/// Context positions of `center` within a symmetric window, center excluded.
pub fn context_positions(len: usize, center: usize, window: usize) -> impl Iterator<Item = usize> {
    let lo = center.saturating_sub(window);
    let hi = (center + window + 1).min(len);
    (lo..hi).filter(move |&j| j != center)
}

pub fn train_cbow<S: AsRef<str>>(sentences: &[Vec<S>], cfg: &CbowConfig) -> Result<WordEmbeddingModel> {
    if cfg.dim == 0 || cfg.window == 0 {
        return Err(Error::Config("cbow dimension and window must be positive".into()));
    }
    let vocab = Vocabulary::build(sentences);
    if vocab.is_empty() {
        return Err(Error::Empty("cbow corpus has an empty vocabulary".into()));
    }
    let ids: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().map(|t| vocab.get(t.as_ref()).expect("built from corpus")).collect())
        .collect();
    let counts: Vec<f64> = vocab.corpus_freq.iter().map(|&c| c as f64).collect();
    let noise = NoiseSampler::new(&counts)?;

    let mut init_rng = rng::seeded(cfg.seed, &[0xCB0]);
    let input = ParamMatrix::uniform(vocab.len(), cfg.dim, &mut init_rng);
    let output = ParamMatrix::zeros(vocab.len(), cfg.dim);

    let tokens_per_epoch: usize = ids.iter().map(Vec::len).sum();
    let decay = LinearDecay {
        start: cfg.start_lr,
        end: cfg.end_lr,
        total: tokens_per_epoch * cfg.epochs,
    };
    let progress = AtomicUsize::new(0);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let parts = sgns::hogwild(ids.len(), cfg.threads, |worker, range| {
            let mut rng = rng::seeded(cfg.seed, &[0xCB1, epoch as u64, worker as u64]);
            let mut scratch = Scratch::new(cfg.dim);
            let mut negatives = vec![0; cfg.negatives];
            let mut context = Vec::with_capacity(2 * cfg.window);
            let (mut loss, mut n) = (0.0, 0usize);
            for sentence in &ids[range] {
                for center in 0..sentence.len() {
                    let lr = decay.at(progress.fetch_add(1, Ordering::Relaxed));
                    context.clear();
                    context.extend(context_positions(sentence.len(), center, cfg.window).map(|j| sentence[j]));
                    if context.is_empty() {
                        continue;
                    }
                    noise.fill(&mut rng, &mut negatives);
                    let step = Step {
                        inputs: &context,
                        target: sentence[center],
                        negatives: &negatives,
                    };
                    loss += scratch.train(&input, &output, step, lr);
                    n += 1;
                }
            }
            (loss, n)
        });
        let (loss, n) = parts.into_iter().fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        epoch_losses.push(if n > 0 { loss / n as f64 } else { 0.0 });
    }

    let input = input.to_vec();
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("cbow produced non-finite vectors".into()));
    }
    Ok(WordEmbeddingModel {
        dim: cfg.dim,
        input,
        output: output.to_vec(),
        vocab,
        config: cfg.clone(),
        epoch_losses,
    })
}
