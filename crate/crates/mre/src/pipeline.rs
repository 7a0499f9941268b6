//! Joins the dataset with its augmented references and scores every
//! candidate under every requested metric.

use std::collections::HashMap;
use std::fmt;

use mre_core::corpus::{split_corpus_with, ExtraGoldPolicy, SkippedSample};
use mre_core::embedding::IdfWeights;
use mre_core::textnorm::{normalize_with, NormalizeOptions};
use mre_core::{EmbeddingProvider, EvaluationRecord, Evaluator, MetricId, ModeScores, QuizSample, ReferenceSet};
use rayon::prelude::*;

use crate::dataset::LoadedSample;
use crate::refs::ReferenceIndex;

/// A candidate paired with the references of its context.
#[derive(Debug, Clone)]
pub struct ScoringItem {
    pub line: usize,
    pub sample: QuizSample,
    pub references: ReferenceSet,
}

#[derive(Debug, Default)]
pub struct Prepared {
    pub items: Vec<ScoringItem>,
    pub skipped: Vec<SkippedSample>,
    /// Contexts whose original reference had no augmented paraphrases.
    pub unaugmented: Vec<String>,
}

/// Splits the corpus and attaches each context's reference set.
///
/// A context without an augmented entry is still scored, against its
/// original alone, and listed in [`Prepared::unaugmented`].
pub fn prepare(samples: &[LoadedSample], index: &ReferenceIndex, policy: ExtraGoldPolicy) -> Prepared {
    let plain: Vec<QuizSample> = samples.iter().map(|s| s.sample.clone()).collect();
    let mut lines: HashMap<(&str, &str), usize> = HashMap::new();
    for s in samples {
        lines.entry((s.sample.context_id.as_str(), s.sample.question.as_str())).or_insert(s.line);
    }

    let split = split_corpus_with(&plain, policy);
    let mut sets: HashMap<&str, ReferenceSet> = HashMap::new();
    let mut unaugmented = Vec::new();
    for (ctx, refs) in &split.references {
        let original = &refs.original.question;
        let set = index.lookup(original).unwrap_or_else(|| {
            log::warn!("no augmented references for context {ctx}; scoring against the original only");
            unaugmented.push(ctx.clone());
            ReferenceSet::original_only(original.clone())
        });
        let set = set.with_additional_gold(refs.additional.iter().map(|s| s.question.clone()));
        sets.insert(ctx.as_str(), set);
    }

    let items = split
        .candidates
        .iter()
        .map(|sample| ScoringItem {
            line: lines[&(sample.context_id.as_str(), sample.question.as_str())],
            references: sets[sample.context_id.as_str()].clone(),
            sample: sample.clone(),
        })
        .collect();
    Prepared { items, skipped: split.skipped, unaugmented }
}

/// Document frequencies over the provider's tokens of every distinct reference.
pub fn reference_idf(
    prepared: &Prepared,
    provider: &dyn EmbeddingProvider,
    normalize: NormalizeOptions,
) -> mre_core::Result<IdfWeights> {
    let mut seen = std::collections::BTreeSet::new();
    let mut documents = Vec::new();
    for item in &prepared.items {
        for reference in item.references.references() {
            let tokens = normalize_with(reference, normalize);
            if seen.insert(tokens.joined()) {
                documents.push(provider.embed(&tokens)?.tokens().to_vec());
            }
        }
    }
    Ok(IdfWeights::from_documents(documents.iter()))
}

#[derive(Debug)]
pub struct ScoreFailure {
    pub context_id: String,
    pub line: usize,
    pub metric: MetricId,
    pub error: mre_core::Error,
}

impl fmt::Display for ScoreFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {} (context {}), {}: {}", self.line, self.context_id, self.metric, self.error)
    }
}

/// Scores all items on up to `jobs` threads. Records come back sorted by
/// context and candidate; every failure is reported, not just the first.
pub fn score(
    prepared: &Prepared,
    evaluator: &Evaluator<'_>,
    metrics: &[MetricId],
    jobs: usize,
) -> Result<Vec<EvaluationRecord>, Vec<ScoreFailure>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    let results: Vec<Result<EvaluationRecord, Vec<ScoreFailure>>> =
        pool.install(|| prepared.items.par_iter().map(|item| score_item(item, evaluator, metrics)).collect());

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(record) => records.push(record),
            Err(mut f) => failures.append(&mut f),
        }
    }
    if !failures.is_empty() {
        failures.sort_by_key(|f| f.line);
        return Err(failures);
    }
    mre_core::evaluation::sort_records(&mut records);
    Ok(records)
}

fn score_item(
    item: &ScoringItem,
    evaluator: &Evaluator<'_>,
    metrics: &[MetricId],
) -> Result<EvaluationRecord, Vec<ScoreFailure>> {
    let mut scores = std::collections::BTreeMap::new();
    let mut failures = Vec::new();
    for metric in metrics {
        match evaluator.score_multi_detailed(metric, &item.sample.question, &item.references) {
            Ok(multi) => {
                scores.insert(metric.clone(), ModeScores::from_reference_scores(multi.reference_scores));
            }
            Err(error) => failures.push(ScoreFailure {
                context_id: item.sample.context_id.clone(),
                line: item.line,
                metric: metric.clone(),
                error,
            }),
        }
    }
    if !failures.is_empty() {
        return Err(failures);
    }
    Ok(EvaluationRecord {
        context_id: item.sample.context_id.clone(),
        candidate: item.sample.question.clone(),
        human_score: item.sample.human_score(),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refs::AugmentedRecord;
    use mre_core::prompts::GenerationMode;
    use mre_core::OneHotProvider;

    fn loaded(line: usize, ctx: &str, q: &str, ann: &[u8]) -> LoadedSample {
        LoadedSample { line, sample: QuizSample::new(ctx, "passage", "answer", q, ann.to_vec()).unwrap() }
    }

    fn corpus() -> Vec<LoadedSample> {
        vec![
            loaded(1, "c1", "Who wrote the novel?", &[1, 1]),
            loaded(2, "c1", "Which author wrote the novel?", &[1, 1]),
            loaded(3, "c1", "Who wrote the poem?", &[0, 0]),
            loaded(4, "c2", "Where is the river?", &[1, 1]),
            loaded(5, "c2", "Where the river is", &[1, 0]),
        ]
    }

    fn index() -> ReferenceIndex {
        ReferenceIndex::new(vec![AugmentedRecord {
            source_question: "who wrote the novel?".into(),
            model: "m".into(),
            mode: GenerationMode::ZeroShot,
            temperature: 0.5,
            paraphrases: vec!["Which author wrote the novel?".into(), "The novel was written by whom?".into()],
        }])
    }

    #[test]
    fn prepare_attaches_references_and_lines() {
        let prepared = prepare(&corpus(), &index(), ExtraGoldPolicy::AsCandidates);
        let lines: Vec<usize> = prepared.items.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![2, 3, 5]);
        assert_eq!(prepared.items[0].references.original(), "Who wrote the novel?");
        assert_eq!(prepared.items[0].references.len(), 3);
        assert_eq!(prepared.items[2].references.len(), 1);
        assert_eq!(prepared.unaugmented, vec!["c2".to_string()]);
    }

    #[test]
    fn scores_are_sorted_and_dominate() {
        let prepared = prepare(&corpus(), &index(), ExtraGoldPolicy::AsCandidates);
        let metrics = [MetricId::Bleu4, MetricId::RougeL, MetricId::Meteor];
        let records = score(&prepared, &Evaluator::new(), &metrics, 2).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records.windows(2).all(|w| (&w[0].context_id, &w[0].candidate) <= (&w[1].context_id, &w[1].candidate)));
        let paraphrased = records.iter().find(|r| r.candidate == "Which author wrote the novel?").unwrap();
        assert_eq!(paraphrased.scores[&MetricId::Bleu4].mre, 1.0);
        assert_eq!(paraphrased.scores[&MetricId::Bleu4].best_reference_index, 1);
        for r in &records {
            for s in r.scores.values() {
                assert!(s.mre >= s.sre);
            }
        }
    }

    #[test]
    fn failures_are_itemized() {
        let prepared = prepare(&corpus(), &index(), ExtraGoldPolicy::AsCandidates);
        let provider = OneHotProvider::new(["who", "wrote"]);
        let evaluator = Evaluator::new().with_embeddings(&provider);
        let failures = score(&prepared, &evaluator, &[MetricId::BertScore], 1).unwrap_err();
        assert!(!failures.is_empty());
        assert!(failures.windows(2).all(|w| w[0].line <= w[1].line));
        assert!(failures[0].to_string().starts_with("line 2 (context c1), bertscore:"));
    }

    #[test]
    fn idf_counts_each_reference_once() {
        let prepared = prepare(&corpus(), &index(), ExtraGoldPolicy::AsCandidates);
        let all: Vec<_> = prepared
            .items
            .iter()
            .flat_map(|i| i.references.references().map(|r| normalize_with(r, NormalizeOptions::default())))
            .collect();
        let provider = OneHotProvider::from_texts(all.iter());
        let idf = reference_idf(&prepared, &provider, NormalizeOptions::default()).unwrap();
        // 4 distinct references; "novel" appears in 3 of them
        assert!((idf.weight("novel") - (5.0f64 / 4.0).ln()).abs() < 1e-12);
        assert!((idf.weight("river") - (5.0f64 / 2.0).ln()).abs() < 1e-12);
    }
}
