//! Single- and multi-reference scoring.
//!
//! A candidate's multi-reference score is the maximum of the metric over the
//! original reference and every paraphrase. The original is always part of
//! the max, so the multi-reference score never drops below the
//! single-reference one.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::embedding::{
    bertscore_with, word_mover_score_with, BertScoreOptions, EmbeddingProvider, ExternalScorer, MoverOptions,
};
use crate::error::{Error, Result};
use crate::lexical::{bleu4_with, meteor_with, rouge_l, MeteorParams, Smoothing, Stemmer};
use crate::metric::{MetricId, MetricScore};
use crate::stats::{pearson, spearman};
use crate::textnorm::{dedup_key, normalize_with, NormalizeOptions};

/// Where the paraphrases of a reference came from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    pub generator: String,
    pub mode: String,
    pub temperature: f64,
}

/// The gold reference plus its augmented paraphrases.
///
/// Index layout used by [`MultiScore::best_reference_index`]: `0` is the
/// original, `1..=N` the paraphrases in order, then any additional gold
/// references.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    original: String,
    paraphrases: Vec<String>,
    additional_gold: Vec<String>,
    pub provenance: Option<Provenance>,
}

impl ReferenceSet {
    /// Builds a set, dropping paraphrases that repeat an earlier entry
    /// (case-insensitive, after normalization) or normalize to nothing.
    pub fn new<I, S>(original: impl Into<String>, paraphrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let original = original.into();
        let mut set = ReferenceSet { original, paraphrases: Vec::new(), additional_gold: Vec::new(), provenance: None };
        let mut seen = BTreeSet::from([dedup_key(&set.original)]);
        set.paraphrases = dedup_into(&mut seen, paraphrases);
        set
    }

    pub fn original_only(original: impl Into<String>) -> Self {
        Self::new(original, core::iter::empty::<String>())
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn with_additional_gold<I, S>(mut self, gold: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen: BTreeSet<String> = self.references().map(dedup_key).collect();
        let extra = dedup_into(&mut seen, gold);
        self.additional_gold.extend(extra);
        self
    }

    pub fn original(&self) -> &str {
        &self.original
    }

    pub fn paraphrases(&self) -> &[String] {
        &self.paraphrases
    }

    pub fn additional_gold(&self) -> &[String] {
        &self.additional_gold
    }

    /// All references in index order.
    pub fn references(&self) -> impl Iterator<Item = &str> {
        core::iter::once(self.original.as_str())
            .chain(self.paraphrases.iter().map(String::as_str))
            .chain(self.additional_gold.iter().map(String::as_str))
    }

    pub fn len(&self) -> usize {
        1 + self.paraphrases.len() + self.additional_gold.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// A copy keeping only the first `k` paraphrases.
    pub fn truncated(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.paraphrases.truncate(k);
        out
    }
}

fn dedup_into<I, S>(seen: &mut BTreeSet<String>, items: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    items
        .into_iter()
        .map(Into::into)
        .filter(|text| {
            let key = dedup_key(text);
            !key.is_empty() && seen.insert(key)
        })
        .collect()
}

/// A text similarity `M(candidate, reference)`.
pub trait SimilarityMetric {
    fn similarity(&self, candidate: &str, reference: &str) -> Result<f64>;
}

impl<F> SimilarityMetric for F
where
    F: Fn(&str, &str) -> Result<f64>,
{
    fn similarity(&self, candidate: &str, reference: &str) -> Result<f64> {
        self(candidate, reference)
    }
}

/// Metric values against every reference of a [`ReferenceSet`], same layout.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReferenceScores {
    pub original: f64,
    pub paraphrases: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub additional_gold: Vec<f64>,
}

impl ReferenceScores {
    /// `(max, index)` using the original, the first `k` paraphrases, and all
    /// additional gold; ties go to the smallest index.
    pub fn best_with(&self, k: usize) -> (f64, usize) {
        let k = k.min(self.paraphrases.len());
        let mut best = (self.original, 0);
        let paraphrases = self.paraphrases[..k].iter().enumerate().map(|(i, &v)| (v, 1 + i));
        let gold = self.additional_gold.iter().enumerate().map(|(i, &v)| (v, 1 + self.paraphrases.len() + i));
        for (value, idx) in paraphrases.chain(gold) {
            if value > best.0 {
                best = (value, idx);
            }
        }
        best
    }

    pub fn best(&self) -> (f64, usize) {
        self.best_with(self.paraphrases.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiScore {
    pub value: f64,
    pub best_reference_index: usize,
    pub reference_scores: ReferenceScores,
}

/// Scores `candidate` against every reference and keeps the maximum.
pub fn score_multi_with<M: SimilarityMetric + ?Sized>(
    metric: &M,
    candidate: &str,
    refs: &ReferenceSet,
) -> Result<MultiScore> {
    let score = |r: &String| metric.similarity(candidate, r);
    let reference_scores = ReferenceScores {
        original: metric.similarity(candidate, &refs.original)?,
        paraphrases: refs.paraphrases.iter().map(score).collect::<Result<_>>()?,
        additional_gold: refs.additional_gold.iter().map(score).collect::<Result<_>>()?,
    };
    let (value, best_reference_index) = reference_scores.best();
    Ok(MultiScore { value, best_reference_index, reference_scores })
}

/// Resolves [`MetricId`]s to concrete metric computations.
///
/// Lexical metrics are always available; embedding metrics need a provider
/// and `external:<label>` metrics need a registered scorer.
#[derive(Clone, Default)]
pub struct Evaluator<'a> {
    normalize: NormalizeOptions,
    smoothing: Smoothing,
    meteor: MeteorParams,
    stemmer: Option<&'a (dyn Stemmer + Sync)>,
    embeddings: Option<&'a (dyn EmbeddingProvider + Sync)>,
    bertscore: BertScoreOptions<'a>,
    mover: MoverOptions<'a>,
    external: BTreeMap<String, &'a (dyn ExternalScorer + Sync)>,
}

impl<'a> Evaluator<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_normalize(mut self, options: NormalizeOptions) -> Self {
        self.normalize = options;
        self
    }

    pub fn with_smoothing(mut self, smoothing: Smoothing) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn with_meteor(mut self, params: MeteorParams, stemmer: Option<&'a (dyn Stemmer + Sync)>) -> Self {
        self.meteor = params;
        self.stemmer = stemmer;
        self
    }

    pub fn with_embeddings(mut self, provider: &'a (dyn EmbeddingProvider + Sync)) -> Self {
        self.embeddings = Some(provider);
        self
    }

    pub fn with_bertscore_options(mut self, options: BertScoreOptions<'a>) -> Self {
        self.bertscore = options;
        self
    }

    pub fn with_mover_options(mut self, options: MoverOptions<'a>) -> Self {
        self.mover = options;
        self
    }

    pub fn with_external(mut self, label: impl Into<String>, scorer: &'a (dyn ExternalScorer + Sync)) -> Self {
        self.external.insert(label.into(), scorer);
        self
    }

    /// Fails with a configuration error if `metric` cannot be computed.
    pub fn check(&self, metric: &MetricId) -> Result<()> {
        match metric {
            MetricId::BertScore | MetricId::MoverScore if self.embeddings.is_none() => {
                Err(Error::Configuration(format!("{metric} needs an embedding provider")))
            }
            MetricId::External(label) if !self.external.contains_key(label) => {
                Err(Error::Configuration(format!("no scorer registered for {metric}")))
            }
            _ => Ok(()),
        }
    }

    pub fn metric(&self, id: &MetricId) -> Result<BoundMetric<'_, 'a>> {
        self.check(id)?;
        Ok(BoundMetric { evaluator: self, id: id.clone() })
    }

    /// `M(candidate, reference)` after normalization.
    pub fn score_single(&self, metric: &MetricId, candidate: &str, reference: &str) -> Result<MetricScore> {
        let value = self.metric(metric)?.similarity(candidate, reference)?;
        Ok(MetricScore { metric: metric.clone(), value })
    }

    /// `max_i M(candidate, reference_i)` with the index of the winning reference.
    pub fn score_multi(&self, metric: &MetricId, candidate: &str, refs: &ReferenceSet) -> Result<(MetricScore, usize)> {
        let multi = self.score_multi_detailed(metric, candidate, refs)?;
        Ok((MetricScore { metric: metric.clone(), value: multi.value }, multi.best_reference_index))
    }

    pub fn score_multi_detailed(&self, metric: &MetricId, candidate: &str, refs: &ReferenceSet) -> Result<MultiScore> {
        score_multi_with(&self.metric(metric)?, candidate, refs)
    }

    fn compute(&self, id: &MetricId, candidate: &str, reference: &str) -> Result<f64> {
        if let MetricId::External(label) = id {
            let scorer = self.external.get(label).ok_or_else(|| Error::Configuration(format!("{id}")))?;
            return scorer.score(candidate, reference);
        }
        let cand = normalize_with(candidate, self.normalize);
        let refs = normalize_with(reference, self.normalize);
        match id {
            MetricId::Bleu4 => bleu4_with(&cand, &refs, self.smoothing),
            MetricId::RougeL => rouge_l(&cand, &refs),
            MetricId::Meteor => meteor_with(&cand, &refs, &self.meteor, self.stemmer.map(|s| s as &dyn Stemmer)),
            MetricId::BertScore => {
                let provider = self.provider(id)?;
                Ok(bertscore_with(&cand, &refs, provider, &self.bertscore)?.f1)
            }
            MetricId::MoverScore => word_mover_score_with(&cand, &refs, self.provider(id)?, &self.mover),
            MetricId::External(_) => unreachable!("handled above"),
        }
    }

    fn provider(&self, id: &MetricId) -> Result<&'a (dyn EmbeddingProvider + Sync)> {
        self.embeddings.ok_or_else(|| Error::Configuration(format!("{id} needs an embedding provider")))
    }
}

/// A metric resolved against an [`Evaluator`].
pub struct BoundMetric<'e, 'a> {
    evaluator: &'e Evaluator<'a>,
    id: MetricId,
}

impl SimilarityMetric for BoundMetric<'_, '_> {
    fn similarity(&self, candidate: &str, reference: &str) -> Result<f64> {
        self.evaluator.compute(&self.id, candidate, reference)
    }
}

/// Single- and multi-reference values for one metric.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeScores {
    pub sre: f64,
    pub mre: f64,
    pub best_reference_index: usize,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub reference_scores: Option<ReferenceScores>,
}

impl ModeScores {
    pub fn from_reference_scores(scores: ReferenceScores) -> Self {
        let (mre, best_reference_index) = scores.best();
        ModeScores { sre: scores.original, mre, best_reference_index, reference_scores: Some(scores) }
    }
}

/// A scored candidate joined to its human score.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationRecord {
    pub context_id: String,
    pub candidate: String,
    pub human_score: f64,
    pub scores: BTreeMap<MetricId, ModeScores>,
}

impl EvaluationRecord {
    pub fn sre(&self, metric: &MetricId) -> Option<MetricScore> {
        self.scores.get(metric).map(|s| MetricScore { metric: metric.clone(), value: s.sre })
    }

    pub fn mre(&self, metric: &MetricId) -> Option<MetricScore> {
        self.scores.get(metric).map(|s| MetricScore { metric: metric.clone(), value: s.mre })
    }
}

/// Sorts records by context id, then candidate text.
pub fn sort_records(records: &mut [EvaluationRecord]) {
    records.sort_by(|a, b| a.context_id.cmp(&b.context_id).then_with(|| a.candidate.cmp(&b.candidate)));
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupMean {
    pub mean: f64,
    pub count: usize,
}

/// Mean `mre - sre` for fully accepted (human score 1) and fully rejected
/// (human score 0) candidates. Absent groups are `None`, never zero.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupDeltas {
    pub accepted: Option<GroupMean>,
    pub rejected: Option<GroupMean>,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeltaReport {
    pub metrics: BTreeMap<MetricId, GroupDeltas>,
}

pub fn delta_report(records: &[EvaluationRecord]) -> DeltaReport {
    let metrics: BTreeSet<&MetricId> = records.iter().flat_map(|r| r.scores.keys()).collect();
    let group_mean = |metric: &MetricId, human: f64| {
        let deltas: Vec<f64> = records
            .iter()
            .filter(|r| r.human_score == human)
            .filter_map(|r| r.scores.get(metric))
            .map(|s| s.mre - s.sre)
            .collect();
        (!deltas.is_empty())
            .then(|| GroupMean { mean: deltas.iter().sum::<f64>() / deltas.len() as f64, count: deltas.len() })
    };
    DeltaReport {
        metrics: metrics
            .into_iter()
            .map(|m| (m.clone(), GroupDeltas { accepted: group_mean(m, 1.0), rejected: group_mean(m, 0.0) }))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationPair {
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
}

impl CorrelationPair {
    pub fn of(x: &[f64], y: &[f64]) -> Self {
        CorrelationPair { pearson: pearson(x, y).ok(), spearman: spearman(x, y).ok() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPoint {
    /// Requested number of paraphrases.
    pub size: usize,
    /// Records that had fewer than `size` paraphrases and used all they had.
    pub short_records: usize,
    pub correlation: CorrelationPair,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepReport {
    pub metric: MetricId,
    pub n: usize,
    /// Single-reference baseline.
    pub sre: CorrelationPair,
    pub points: Vec<SweepPoint>,
}

/// The default paraphrase counts swept.
pub const DEFAULT_SWEEP_SIZES: [usize; 5] = [1, 2, 5, 10, 20];

/// Correlation with human scores when only the first `k` paraphrases are used,
/// for each `k` in `sizes`.
pub fn n_sweep(metric: &MetricId, items: &[(f64, &ReferenceScores)], sizes: &[usize]) -> Result<SweepReport> {
    let human: Vec<f64> = items.iter().map(|(h, _)| *h).collect();
    let distinct: BTreeSet<u64> = human.iter().map(|h| h.to_bits()).collect();
    if distinct.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "{metric}: need at least two distinct human scores, got {}",
            distinct.len()
        )));
    }
    let sre: Vec<f64> = items.iter().map(|(_, s)| s.original).collect();
    let points = sizes
        .iter()
        .map(|&size| {
            let mre: Vec<f64> = items.iter().map(|(_, s)| s.best_with(size).0).collect();
            SweepPoint {
                size,
                short_records: items.iter().filter(|(_, s)| s.paraphrases.len() < size).count(),
                correlation: CorrelationPair::of(&mre, &human),
            }
        })
        .collect();
    Ok(SweepReport { metric: metric.clone(), n: items.len(), sre: CorrelationPair::of(&sre, &human), points })
}

/// [`n_sweep`] over scored records that carry per-reference scores for `metric`.
pub fn n_sweep_records(metric: &MetricId, records: &[EvaluationRecord], sizes: &[usize]) -> Result<SweepReport> {
    let items: Vec<(f64, &ReferenceScores)> = records
        .iter()
        .filter_map(|r| r.scores.get(metric).and_then(|s| s.reference_scores.as_ref()).map(|s| (r.human_score, s)))
        .collect();
    n_sweep(metric, &items, sizes)
}
