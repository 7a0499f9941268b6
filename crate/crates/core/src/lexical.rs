//! Single-reference lexical metrics: BLEU-4, ROUGE-L and METEOR.
//!
//! All three take pre-normalized [`TokenSequence`]s. Multi-reference
//! aggregation is not handled here; see [`crate::evaluation`].

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::textnorm::TokenSequence;

const BLEU_ORDER: usize = 4;

/// Precision smoothing for BLEU.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Smoothing {
    /// Any zero n-gram precision yields a score of exactly 0.
    #[default]
    None,
    /// Add one to numerator and denominator of the 2..4-gram precisions.
    AddOne,
}

/// Sentence-level BLEU-4 with uniform weights and no smoothing.
pub fn bleu4(candidate: &TokenSequence, reference: &TokenSequence) -> Result<f64> {
    bleu4_with(candidate, reference, Smoothing::None)
}

pub fn bleu4_with(candidate: &TokenSequence, reference: &TokenSequence, smoothing: Smoothing) -> Result<f64> {
    if candidate.is_empty() {
        return Err(domain("bleu4: empty candidate"));
    }
    if reference.is_empty() {
        return Err(domain("bleu4: empty reference"));
    }

    let mut log_sum = 0.0;
    for n in 1..=BLEU_ORDER {
        let cand_counts = ngram_counts(candidate, n);
        let ref_counts = ngram_counts(reference, n);
        let total: usize = cand_counts.values().sum();
        let clipped: usize =
            cand_counts.iter().map(|(gram, &count)| count.min(ref_counts.get(gram).copied().unwrap_or(0))).sum();

        let (num, den) = match smoothing {
            Smoothing::AddOne if n > 1 => (clipped as f64 + 1.0, total as f64 + 1.0),
            _ => (clipped as f64, total as f64),
        };
        if num == 0.0 || den == 0.0 {
            return Ok(0.0);
        }
        log_sum += libm::log(num / den);
    }

    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let brevity = if c > r { 1.0 } else { libm::exp(1.0 - r / c) };
    Ok((brevity * libm::exp(log_sum / BLEU_ORDER as f64)).min(1.0))
}

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut counts = BTreeMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1: harmonic mean of LCS/|candidate| and LCS/|reference|.
pub fn rouge_l(candidate: &TokenSequence, reference: &TokenSequence) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(domain("rouge_l: empty input"));
    }
    let lcs = lcs_len(candidate, reference) as f64;
    if lcs == 0.0 {
        return Ok(0.0);
    }
    let precision = lcs / candidate.len() as f64;
    let recall = lcs / reference.len() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Maps a word to its stem for METEOR's second matching stage.
pub trait Stemmer {
    fn stem(&self, word: &str) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams { alpha: 0.9, beta: 3.0, gamma: 0.5 }
    }
}

/// METEOR with exact matching only and the default parameters.
pub fn meteor(candidate: &TokenSequence, reference: &TokenSequence) -> Result<f64> {
    meteor_with(candidate, reference, &MeteorParams::default(), None)
}

/// METEOR with configurable parameters and an optional stemming stage.
///
/// Alignment runs in stages (exact, then stems over the still-unmatched
/// tokens). Within a stage the longest common contiguous run of unmatched
/// tokens is aligned first, ties going to the earliest candidate position and
/// then the earliest reference position. This reaches the maximum number of
/// matches and keeps chunks long.
pub fn meteor_with(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    params: &MeteorParams,
    stemmer: Option<&dyn Stemmer>,
) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(domain("meteor: empty input"));
    }

    let mut aligner = Aligner::new(candidate.len(), reference.len());
    aligner.align_stage(candidate, reference);
    if let Some(stemmer) = stemmer {
        let cand_stems: Vec<String> = candidate.iter().map(|w| stemmer.stem(w)).collect();
        let ref_stems: Vec<String> = reference.iter().map(|w| stemmer.stem(w)).collect();
        aligner.align_stage(&cand_stems, &ref_stems);
    }

    let mut pairs = aligner.pairs;
    let matches = pairs.len();
    if matches == 0 {
        return Ok(0.0);
    }
    pairs.sort_unstable();
    let chunks = 1 + pairs.windows(2).filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1)).count();

    let m = matches as f64;
    let precision = m / candidate.len() as f64;
    let recall = m / reference.len() as f64;
    let fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    let penalty = params.gamma * libm::pow(chunks as f64 / m, params.beta);
    Ok(fmean * (1.0 - penalty))
}

struct Aligner {
    cand_used: Vec<bool>,
    ref_used: Vec<bool>,
    pairs: Vec<(usize, usize)>,
}

impl Aligner {
    fn new(cand_len: usize, ref_len: usize) -> Self {
        Aligner { cand_used: vec![false; cand_len], ref_used: vec![false; ref_len], pairs: Vec::new() }
    }

    fn align_stage<T: PartialEq>(&mut self, cand: &[T], reference: &[T]) {
        while let Some((i, j, len)) = self.longest_run(cand, reference) {
            for t in 0..len {
                self.cand_used[i + t] = true;
                self.ref_used[j + t] = true;
                self.pairs.push((i + t, j + t));
            }
        }
    }

    fn longest_run<T: PartialEq>(&self, cand: &[T], reference: &[T]) -> Option<(usize, usize, usize)> {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..cand.len() {
            for j in 0..reference.len() {
                let mut len = 0;
                while i + len < cand.len()
                    && j + len < reference.len()
                    && !self.cand_used[i + len]
                    && !self.ref_used[j + len]
                    && cand[i + len] == reference[j + len]
                {
                    len += 1;
                }
                if len > 0 && best.is_none_or(|(_, _, b)| len > b) {
                    best = Some((i, j, len));
                }
            }
        }
        best
    }
}
