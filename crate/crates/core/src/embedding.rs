//! Embedding-space metrics over a pluggable [`EmbeddingProvider`].
//!
//! No model runs in-process: vectors come from a provider (precomputed file,
//! remote endpoint, or the [`OneHotProvider`] used for testing). Providers own
//! their tokenization, so the vectors need not line up with our word tokens.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::textnorm::TokenSequence;
use crate::transport::{solve_transport_bounded, TransportProblem, DEFAULT_MAX_CELLS};

/// Per-token vectors for one text, all of the same non-zero dimension.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Embeddings {
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl Embeddings {
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Provider("no vectors returned".into()));
        }
        if tokens.len() != vectors.len() {
            return Err(Error::Provider(format!("{} tokens but {} vectors", tokens.len(), vectors.len())));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::Provider("zero-dimensional vectors".into()));
        }
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Provider("vectors differ in dimension".into()));
        }
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Provider("non-finite vector entry".into()));
        }
        Ok(Embeddings { tokens, vectors })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Source of token embeddings. Must be deterministic for a fixed configuration.
pub trait EmbeddingProvider {
    fn embed(&self, text: &TokenSequence) -> Result<Embeddings>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn embed(&self, text: &TokenSequence) -> Result<Embeddings> {
        (**self).embed(text)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for alloc::boxed::Box<P> {
    fn embed(&self, text: &TokenSequence) -> Result<Embeddings> {
        (**self).embed(text)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for alloc::sync::Arc<P> {
    fn embed(&self, text: &TokenSequence) -> Result<Embeddings> {
        (**self).embed(text)
    }
}

/// One-hot vectors over a fixed vocabulary. Under this provider cosine
/// similarity is 1 for equal tokens and 0 otherwise.
#[derive(Debug, Clone, Default)]
pub struct OneHotProvider {
    vocab: BTreeMap<String, usize>,
}

impl OneHotProvider {
    pub fn new<I, S>(vocabulary: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: BTreeSet<String> = vocabulary.into_iter().map(Into::into).collect();
        let vocab = words.into_iter().enumerate().map(|(i, w)| (w, i)).collect();
        OneHotProvider { vocab }
    }

    pub fn from_texts<'a, I: IntoIterator<Item = &'a TokenSequence>>(texts: I) -> Self {
        Self::new(texts.into_iter().flat_map(|t| t.iter().cloned()))
    }

    pub fn dim(&self) -> usize {
        self.vocab.len()
    }
}

impl EmbeddingProvider for OneHotProvider {
    fn embed(&self, text: &TokenSequence) -> Result<Embeddings> {
        let dim = self.vocab.len();
        let vectors = text
            .iter()
            .map(|tok| {
                let idx = *self
                    .vocab
                    .get(tok)
                    .ok_or_else(|| Error::Provider(format!("token `{tok}` outside one-hot vocabulary")))?;
                let mut v = vec![0.0; dim];
                v[idx] = 1.0;
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Embeddings::new(text.tokens().to_vec(), vectors)
    }
}

/// Inverse document frequencies, `ln((M + 1) / (df + 1))` over `M` documents.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfWeights {
    weights: BTreeMap<String, f64>,
    unseen: f64,
}

impl IdfWeights {
    pub fn from_documents<'a, I, D>(documents: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
        let mut total = 0usize;
        for doc in documents {
            total += 1;
            let unique: BTreeSet<&String> = doc.into_iter().collect();
            for tok in unique {
                *doc_freq.entry(tok.clone()).or_insert(0) += 1;
            }
        }
        let m = total as f64;
        let weights = doc_freq.into_iter().map(|(tok, df)| (tok, libm::log((m + 1.0) / (df as f64 + 1.0)))).collect();
        IdfWeights { weights, unseen: libm::log(m + 1.0) }
    }

    pub fn weight(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(self.unseen)
    }

    /// Normalized weights for a token list; uniform if every weight is zero.
    fn distribution(&self, tokens: &[String]) -> Vec<f64> {
        let raw: Vec<f64> = tokens.iter().map(|t| self.weight(t)).collect();
        normalize_weights(raw)
    }
}

fn normalize_weights(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.into_iter().map(|w| w / total).collect()
    } else {
        let n = raw.len() as f64;
        vec![1.0 / n; raw.len()]
    }
}

fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BertScoreOptions<'a> {
    pub idf: Option<&'a IdfWeights>,
    /// Baseline `b` for rescaling: `(x - b) / (1 - b)`.
    pub baseline: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BertScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Greedy-matching BERTScore with IDF weighting and rescaling off.
pub fn bertscore<P: EmbeddingProvider + ?Sized>(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    provider: &P,
) -> Result<BertScore> {
    bertscore_with(candidate, reference, provider, &BertScoreOptions::default())
}

pub fn bertscore_with<P: EmbeddingProvider + ?Sized>(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    provider: &P,
    options: &BertScoreOptions<'_>,
) -> Result<BertScore> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::Domain("bertscore: empty input".into()));
    }
    let cand = provider.embed(candidate)?;
    let refs = provider.embed(reference)?;
    check_dims(&cand, &refs)?;
    let sim = cosine_matrix(&cand, &refs)?;

    let best_for_cand: Vec<f64> = sim.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let best_for_ref: Vec<f64> =
        (0..refs.len()).map(|j| sim.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max)).collect();

    let (precision, recall) = match options.idf {
        None => (mean(&best_for_cand), mean(&best_for_ref)),
        Some(idf) => (
            weighted(&best_for_cand, &idf.distribution(cand.tokens())),
            weighted(&best_for_ref, &idf.distribution(refs.tokens())),
        ),
    };
    let (precision, recall) = match options.baseline {
        Some(b) => ((precision - b) / (1.0 - b), (recall - b) / (1.0 - b)),
        None => (precision, recall),
    };
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(BertScore { precision, recall, f1 })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn weighted(xs: &[f64], weights: &[f64]) -> f64 {
    xs.iter().zip(weights).map(|(x, w)| x * w).sum()
}

fn check_dims(a: &Embeddings, b: &Embeddings) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Provider(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

fn cosine_matrix(a: &Embeddings, b: &Embeddings) -> Result<Vec<Vec<f64>>> {
    let a_norms = nonzero_norms(a)?;
    let b_norms = nonzero_norms(b)?;
    Ok(a.vectors()
        .iter()
        .zip(&a_norms)
        .map(|(x, nx)| {
            b.vectors()
                .iter()
                .zip(&b_norms)
                .map(|(y, ny)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>() / (nx * ny))
                .collect()
        })
        .collect())
}

fn nonzero_norms(e: &Embeddings) -> Result<Vec<f64>> {
    e.vectors()
        .iter()
        .enumerate()
        .map(|(index, v)| {
            let n = norm(v);
            if n == 0.0 {
                Err(Error::DegenerateEmbedding { index })
            } else {
                Ok(n)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct MoverOptions<'a> {
    pub idf: Option<&'a IdfWeights>,
    pub max_cells: usize,
}

impl Default for MoverOptions<'_> {
    fn default() -> Self {
        MoverOptions { idf: None, max_cells: DEFAULT_MAX_CELLS }
    }
}

/// Word-mover distance: minimum-cost transport between the two token
/// distributions under Euclidean ground cost.
pub fn word_mover_distance<P: EmbeddingProvider + ?Sized>(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    provider: &P,
    options: &MoverOptions<'_>,
) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::Domain("word mover: empty input".into()));
    }
    let cand = provider.embed(candidate)?;
    let refs = provider.embed(reference)?;
    check_dims(&cand, &refs)?;
    let cells = cand.len() * refs.len();
    if cells > options.max_cells {
        return Err(Error::Capacity { cells, limit: options.max_cells });
    }

    let costs = cand
        .vectors()
        .iter()
        .map(|x| {
            refs.vectors().iter().map(|y| libm::sqrt(x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum())).collect()
        })
        .collect();
    let (supply, demand) = match options.idf {
        Some(idf) => (idf.distribution(cand.tokens()), idf.distribution(refs.tokens())),
        None => (uniform_weights(cand.len()), uniform_weights(refs.len())),
    };
    let problem = TransportProblem::new(costs, supply, demand)?;
    Ok(solve_transport_bounded(&problem, options.max_cells)?.cost)
}

/// Similarity `1 / (1 + WMD)`, in `(0, 1]`.
pub fn word_mover_score<P: EmbeddingProvider + ?Sized>(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    provider: &P,
) -> Result<f64> {
    word_mover_score_with(candidate, reference, provider, &MoverOptions::default())
}

pub fn word_mover_score_with<P: EmbeddingProvider + ?Sized>(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    provider: &P,
    options: &MoverOptions<'_>,
) -> Result<f64> {
    Ok(1.0 / (1.0 + word_mover_distance(candidate, reference, provider, options)?))
}

/// A learned metric consumed as a black box (e.g. BLEURT behind an HTTP endpoint).
///
/// Values are passed through unclamped.
pub trait ExternalScorer {
    fn score(&self, candidate: &str, reference: &str) -> Result<f64>;
}

impl<S: ExternalScorer + ?Sized> ExternalScorer for &S {
    fn score(&self, candidate: &str, reference: &str) -> Result<f64> {
        (**self).score(candidate, reference)
    }
}

impl<S: ExternalScorer + ?Sized> ExternalScorer for alloc::sync::Arc<S> {
    fn score(&self, candidate: &str, reference: &str) -> Result<f64> {
        (**self).score(candidate, reference)
    }
}
