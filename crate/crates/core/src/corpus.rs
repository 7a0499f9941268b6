//! Annotated samples, human scores and the reference/candidate split.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::textnorm::dedup_key;

/// One annotated question for a context.
#[derive(Debug, Clone, PartialEq)]
pub struct QuizSample {
    pub context_id: String,
    pub context: String,
    pub answer: String,
    pub question: String,
    annotations: Vec<u8>,
    human_score: f64,
}

impl QuizSample {
    pub fn new(
        context_id: impl Into<String>,
        context: impl Into<String>,
        answer: impl Into<String>,
        question: impl Into<String>,
        annotations: Vec<u8>,
    ) -> Result<Self> {
        let human_score = human_score(&annotations)?;
        Ok(QuizSample {
            context_id: context_id.into(),
            context: context.into(),
            answer: answer.into(),
            question: question.into(),
            annotations,
            human_score,
        })
    }

    pub fn annotations(&self) -> &[u8] {
        &self.annotations
    }

    pub fn human_score(&self) -> f64 {
        self.human_score
    }

    /// True iff every annotator accepted the question.
    pub fn is_accepted(&self) -> bool {
        self.annotations.iter().all(|&a| a == 1)
    }
}

/// Mean of binary annotations.
pub fn human_score(annotations: &[u8]) -> Result<f64> {
    if annotations.is_empty() {
        return Err(domain("human_score: no annotations"));
    }
    if let Some(bad) = annotations.iter().find(|&&a| a > 1) {
        return Err(domain(format!("human_score: annotation {bad} is not 0 or 1")));
    }
    let accepted = annotations.iter().filter(|&&a| a == 1).count();
    Ok(accepted as f64 / annotations.len() as f64)
}

/// What to do with the second and later fully-accepted questions of a context.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ExtraGoldPolicy {
    /// Evaluate them as (accepted) candidates against the first one.
    #[default]
    AsCandidates,
    /// Treat them as additional gold references; they enter the multi-reference max.
    AsReferences,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SkipReason {
    /// The context has no fully-accepted question to serve as reference.
    NoReference,
    /// The question is textually identical to one of the context's references.
    DuplicateOfReference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedSample {
    pub sample: QuizSample,
    pub reason: SkipReason,
}

/// Gold references for one context.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextReferences {
    /// First fully-accepted question in input order.
    pub original: QuizSample,
    /// Further accepted questions, populated only under [`ExtraGoldPolicy::AsReferences`].
    pub additional: Vec<QuizSample>,
}

impl ContextReferences {
    pub fn len(&self) -> usize {
        1 + self.additional.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn contains_text(&self, key: &str) -> bool {
        dedup_key(&self.original.question) == key || self.additional.iter().any(|s| dedup_key(&s.question) == key)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusSplit {
    pub references: BTreeMap<String, ContextReferences>,
    /// Candidates in input order; each has a reference for its context.
    pub candidates: Vec<QuizSample>,
    pub skipped: Vec<SkippedSample>,
}

impl CorpusSplit {
    pub fn reference_count(&self) -> usize {
        self.references.values().map(ContextReferences::len).sum()
    }

    /// Contexts dropped because no question was fully accepted, sorted.
    pub fn skipped_contexts(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .skipped
            .iter()
            .filter(|s| s.reason == SkipReason::NoReference)
            .map(|s| s.sample.context_id.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

pub fn split_corpus(samples: &[QuizSample]) -> CorpusSplit {
    split_corpus_with(samples, ExtraGoldPolicy::default())
}

pub fn split_corpus_with(samples: &[QuizSample], policy: ExtraGoldPolicy) -> CorpusSplit {
    let mut references: BTreeMap<String, ContextReferences> = BTreeMap::new();
    let mut is_reference = alloc::vec![false; samples.len()];
    for (idx, sample) in samples.iter().enumerate().filter(|(_, s)| s.is_accepted()) {
        match references.get_mut(&sample.context_id) {
            None => {
                references.insert(
                    sample.context_id.clone(),
                    ContextReferences { original: sample.clone(), additional: Vec::new() },
                );
                is_reference[idx] = true;
            }
            Some(refs) if policy == ExtraGoldPolicy::AsReferences => {
                if !refs.contains_text(&dedup_key(&sample.question)) {
                    refs.additional.push(sample.clone());
                    is_reference[idx] = true;
                }
            }
            Some(_) => {}
        }
    }

    let mut split = CorpusSplit { references, ..CorpusSplit::default() };
    for (sample, _) in samples.iter().zip(&is_reference).filter(|(_, r)| !**r) {
        let reason = match split.references.get(&sample.context_id) {
            None => Some(SkipReason::NoReference),
            Some(refs) if refs.contains_text(&dedup_key(&sample.question)) => Some(SkipReason::DuplicateOfReference),
            Some(_) => None,
        };
        match reason {
            Some(reason) => split.skipped.push(SkippedSample { sample: sample.clone(), reason }),
            None => split.candidates.push(sample.clone()),
        }
    }
    split
}
