use std::collections::HashMap;

use crate::error::{Error, Result};

/// Terms of a document collection, most frequent first (ties by term).
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    pub doc_freq: Vec<usize>,
    pub corpus_freq: Vec<usize>,
    pub n_docs: usize,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn build<S: AsRef<str>>(docs: &[Vec<S>]) -> Self {
        let mut cf: HashMap<&str, usize> = HashMap::new();
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = Vec::with_capacity(doc.len());
            for tok in doc {
                let t = tok.as_ref();
                *cf.entry(t).or_default() += 1;
                seen.push(t);
            }
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut terms: Vec<(&str, usize)> = cf.into_iter().collect();
        terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let doc_freq = terms.iter().map(|(t, _)| df[t]).collect();
        let corpus_freq = terms.iter().map(|&(_, n)| n).collect();
        let terms: Vec<String> = terms.into_iter().map(|(t, _)| t.to_string()).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            doc_freq,
            corpus_freq,
            n_docs: docs.len(),
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// User-level TF-IDF over the `dim` most frequent terms.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`; a document's vector is raw term
/// count times idf, L2-normalised when `normalize` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    pub normalize: bool,
    index: HashMap<String, usize>,
}

impl TfidfModel {
    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn transform<S: AsRef<str>>(&self, doc: &[S]) -> Vec<f64> {
        let mut v = vec![0.0; self.terms.len()];
        for tok in doc {
            if let Some(&i) = self.index.get(tok.as_ref()) {
                v[i] += 1.0;
            }
        }
        for (x, idf) in v.iter_mut().zip(&self.idf) {
            *x *= idf;
        }
        if self.normalize {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
        }
        v
    }
}

pub fn fit_tfidf<S: AsRef<str>>(docs: &[Vec<S>], dim: usize, normalize: bool) -> Result<TfidfModel> {
    if docs.is_empty() {
        return Err(Error::Empty("tf-idf needs at least one document".into()));
    }
    let vocab = Vocabulary::build(docs);
    if dim == 0 || dim > vocab.len() {
        return Err(Error::Config(format!(
            "tf-idf dimension {dim} must be between 1 and the vocabulary size {}",
            vocab.len()
        )));
    }
    let n = vocab.n_docs as f64;
    let terms: Vec<String> = vocab.terms[..dim].to_vec();
    let idf = vocab.doc_freq[..dim]
        .iter()
        .map(|&df| ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0)
        .collect();
    let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(TfidfModel {
        terms,
        idf,
        normalize,
        index,
    })
}
