//! The `mre` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mre_core::corpus::{split_corpus_with, ExtraGoldPolicy};
use mre_core::embedding::{BertScoreOptions, MoverOptions};
use mre_core::evaluation::{delta_report, n_sweep_records, DeltaReport, SweepReport, DEFAULT_SWEEP_SIZES};
use mre_core::lexical::{MeteorParams, Smoothing};
use mre_core::textnorm::{normalize_with, NormalizeOptions};
use mre_core::{
    correlation_report, CorrelationReport, EmbeddingProvider, Evaluator, GenerationMode, MetricId, OneHotProvider,
};
use serde::{Deserialize, Serialize};

use crate::augment::{
    augment_all, ApiStyle, AugmentationCache, CompletionTransport, GeneratorConfig, HttpCompletionClient,
    RecordingTransport, ReplayTransport, RetryPolicy,
};
use crate::dataset::{load_dataset, load_dataset_lines};
use crate::error::{MreError, Result};
use crate::providers::{CachingProvider, EmbeddingFile, EnglishStemmer, HttpEmbeddingProvider, HttpScorer};
use crate::records::{read_records, write_records};
use crate::refs::{read_refs, write_refs, AugmentedRecord, ReferenceIndex};
use crate::{pipeline, synth};

#[derive(Debug, Parser)]
#[command(name = "mre", version, about = "Multi-reference evaluation of generated questions")]
pub struct Cli {
    /// More log output (repeatable). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate paraphrased references for every context's original question.
    Augment(AugmentArgs),
    /// Score candidates against single and multiple references.
    Score(ScoreArgs),
    /// Correlate scores with human judgements; writes JSON and a .txt table.
    Correlate(CorrelateArgs),
    /// Correlation as a function of the number of references; writes JSON and .tsv.
    Sweep(SweepArgs),
    /// Write a seeded synthetic dataset plus replay fixtures.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Zero,
    Few,
}

impl From<ModeArg> for GenerationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Zero => GenerationMode::ZeroShot,
            ModeArg::Few => GenerationMode::FewShot,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ApiArg {
    Chat,
    Completion,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum ExtraGoldArg {
    /// Later accepted questions of a context are scored as candidates.
    #[default]
    Candidates,
    /// Later accepted questions join the context's references.
    References,
}

impl From<ExtraGoldArg> for ExtraGoldPolicy {
    fn from(a: ExtraGoldArg) -> Self {
        match a {
            ExtraGoldArg::Candidates => ExtraGoldPolicy::AsCandidates,
            ExtraGoldArg::References => ExtraGoldPolicy::AsReferences,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    #[arg(long, default_value = "text-davinci-003")]
    pub model: String,
    #[arg(long, value_enum, default_value = "zero")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0.5)]
    pub temperature: f64,
    /// Paraphrases requested per question.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "completion")]
    pub api: ApiArg,
    #[arg(long, default_value = "https://api.openai.com/v1/completions")]
    pub endpoint: String,
}

impl GeneratorArgs {
    pub fn config(&self) -> Result<GeneratorConfig> {
        let config = GeneratorConfig {
            model: self.model.clone(),
            mode: self.mode.into(),
            temperature: self.temperature,
            n: self.n,
            endpoint: self.endpoint.clone(),
            api: match self.api {
                ApiArg::Chat => ApiStyle::Chat,
                ApiArg::Completion => ApiStyle::Completion,
            },
        };
        config.validate().map_err(MreError::Config)?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Serve completions from recorded fixtures; never touches the network.
    #[arg(long, conflicts_with = "record")]
    pub replay: Option<PathBuf>,
    /// Record live completions into this directory.
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// JSONL cache of generated sets, reused across runs.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[arg(long, default_value_t = 3)]
    pub max_attempts: u32,
    /// Live requests per second.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// Request timeout in seconds.
    #[arg(long, default_value_t = 30)]
    pub timeout: u64,
    #[arg(long, value_enum, default_value_t)]
    pub extra_gold: ExtraGoldArg,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub refs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated metric names. Defaults to the lexical metrics plus any
    /// metric made available by --embeddings or --scorer.
    #[arg(long, value_delimiter = ',', value_parser = parse_metric)]
    pub metrics: Vec<MetricId>,
    /// `onehot`, a JSONL embedding file, or an http(s) endpoint.
    #[arg(long)]
    pub embeddings: Option<String>,
    /// External scorer as `[label=]url`; adds metric `external:<label>`.
    #[arg(long)]
    pub scorer: Vec<String>,
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[arg(long)]
    pub keep_punctuation: bool,
    /// Add a stem-matching stage to METEOR.
    #[arg(long)]
    pub meteor_stem: bool,
    /// Add-one smoothing for BLEU n-gram precisions above unigrams.
    #[arg(long)]
    pub bleu_smoothing: bool,
    /// IDF-weight embedding metrics, with frequencies taken over the references.
    #[arg(long)]
    pub idf: bool,
    /// Rescale BERTScore with this baseline.
    #[arg(long)]
    pub baseline: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub extra_gold: ExtraGoldArg,
    #[arg(long, default_value_t = 30)]
    pub timeout: u64,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub scored: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Restrict to these metrics; defaults to every metric in the file.
    #[arg(long, value_delimiter = ',', value_parser = parse_metric)]
    pub metrics: Vec<MetricId>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scored: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_metric)]
    pub metrics: Vec<MetricId>,
    /// Reference-set sizes (paraphrases besides the original).
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP_SIZES)]
    pub sizes: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; receives dataset.jsonl and fixtures/.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub contexts: usize,
    #[command(flatten)]
    pub generator: GeneratorArgs,
}

fn parse_metric(s: &str) -> std::result::Result<MetricId, String> {
    s.parse().map_err(|e: mre_core::Error| e.to_string())
}

/// Correlation output: pooled coefficients plus per-group deltas.
#[derive(Debug, Serialize, Deserialize)]
pub struct CorrelateOutput {
    pub correlations: CorrelationReport,
    pub deltas: DeltaReport,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Augment(a) => augment(a),
        Command::Score(a) => score(a),
        Command::Correlate(a) => correlate(a),
        Command::Sweep(a) => sweep(a),
        Command::Synth(a) => synthesize(a),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(MreError::Config(format!("input file {} does not exist", path.display())))
    }
}

fn require_dir(path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(MreError::Config(format!("directory {} does not exist", path.display())))
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

/// The output's directory must exist and the output must not overwrite an input.
fn require_output(out: &Path, inputs: &[&Path]) -> Result<()> {
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    require_dir(parent)?;
    if out.is_dir() {
        return Err(MreError::Config(format!("output {} is a directory", out.display())));
    }
    if let Some(input) = inputs.iter().find(|i| same_file(out, i)) {
        return Err(MreError::Config(format!("output {} would overwrite input {}", out.display(), input.display())));
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| MreError::io(path, e))
}

fn sibling(out: &Path, extension: &str) -> Result<PathBuf> {
    let side = out.with_extension(extension);
    if side == out {
        return Err(MreError::Config(format!("output {} must not end in .{extension}", out.display())));
    }
    Ok(side)
}

fn augment(args: AugmentArgs) -> Result<()> {
    require_file(&args.dataset)?;
    if let Some(dir) = &args.replay {
        require_dir(dir)?;
    }
    let mut inputs = vec![args.dataset.as_path()];
    if let Some(cache) = &args.cache {
        inputs.push(cache);
    }
    require_output(&args.out, &inputs)?;
    let config = args.generator.config()?;

    let samples = load_dataset(&args.dataset)?;
    let split = split_corpus_with(&samples, args.extra_gold.into());
    let questions: Vec<String> = split.references.values().map(|r| r.original.question.clone()).collect();

    let (transport, retry): (Box<dyn CompletionTransport>, RetryPolicy) = match (&args.replay, &args.record) {
        (Some(dir), _) => (Box::new(ReplayTransport::new(dir)), RetryPolicy::no_delay(args.max_attempts)),
        (None, record) => {
            let client =
                HttpCompletionClient::from_env(&config.endpoint, Duration::from_secs(args.timeout), args.rate)?;
            let transport: Box<dyn CompletionTransport> = match record {
                Some(dir) => Box::new(RecordingTransport::new(client, dir)),
                None => Box::new(client),
            };
            (transport, RetryPolicy { max_attempts: args.max_attempts, ..RetryPolicy::default() })
        }
    };
    let cache = match &args.cache {
        Some(path) => AugmentationCache::open(path)?,
        None => AugmentationCache::in_memory(),
    };

    let results = augment_all(&questions, &config, transport.as_ref(), &cache, &retry, args.jobs);
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (question, result) in results {
        match result {
            Ok(out) => {
                if let Some(short) = out.shortfall {
                    log::warn!("`{question}`: {short} paraphrase(s) short of {}", config.n);
                }
                records.push(AugmentedRecord::from_reference_set(
                    &out.references,
                    &config.model,
                    config.mode,
                    config.temperature,
                ));
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    // successes are kept even when some questions fail
    write_refs(&args.out, &records)?;
    log::info!("wrote {} reference set(s) to {}", records.len(), args.out.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(MreError::Failures { what: "augmentation(s)", items: failures })
    }
}

fn default_metrics(embeddings: bool, scorers: &[(String, HttpScorer)]) -> Vec<MetricId> {
    let mut metrics = MetricId::LEXICAL.to_vec();
    if embeddings {
        metrics.extend([MetricId::BertScore, MetricId::MoverScore]);
    }
    metrics.extend(scorers.iter().map(|(label, _)| MetricId::External(label.clone())));
    metrics
}

fn parse_scorer(arg: &str, timeout: Duration) -> Result<(String, HttpScorer)> {
    let (label, url) = match arg.split_once('=') {
        Some((label, url)) if !label.contains("://") => (label.to_string(), url),
        _ => ("external".to_string(), arg),
    };
    if label.is_empty() || url.is_empty() {
        return Err(MreError::Config(format!("bad --scorer `{arg}`; expected [label=]url")));
    }
    Ok((label, HttpScorer::new(url, timeout)?))
}

fn score(args: ScoreArgs) -> Result<()> {
    require_file(&args.dataset)?;
    require_file(&args.refs)?;
    require_output(&args.out, &[&args.dataset, &args.refs])?;
    let timeout = Duration::from_secs(args.timeout);
    let scorers = args.scorer.iter().map(|s| parse_scorer(s, timeout)).collect::<Result<Vec<_>>>()?;
    let metrics = if args.metrics.is_empty() {
        default_metrics(args.embeddings.is_some(), &scorers)
    } else {
        args.metrics.clone()
    };

    let samples = load_dataset_lines(&args.dataset)?;
    let index = ReferenceIndex::new(read_refs(&args.refs)?);
    let prepared = pipeline::prepare(&samples, &index, args.extra_gold.into());
    for s in &prepared.skipped {
        log::info!("skipping `{}` in context {}: {:?}", s.sample.question, s.sample.context_id, s.reason);
    }

    let normalize = NormalizeOptions { keep_punctuation: args.keep_punctuation };
    let provider: Option<Box<dyn EmbeddingProvider + Sync>> = match args.embeddings.as_deref() {
        None => None,
        Some("onehot") => {
            let texts: Vec<_> = prepared
                .items
                .iter()
                .flat_map(|i| std::iter::once(i.sample.question.as_str()).chain(i.references.references()))
                .map(|t| normalize_with(t, normalize))
                .collect();
            Some(Box::new(OneHotProvider::from_texts(texts.iter())))
        }
        Some(url) if url.starts_with("http://") || url.starts_with("https://") => {
            Some(Box::new(CachingProvider::new(HttpEmbeddingProvider::new(url, timeout)?)))
        }
        Some(path) => {
            let path = Path::new(path);
            require_file(path)?;
            Some(Box::new(EmbeddingFile::load(path)?))
        }
    };
    let idf = match (&provider, args.idf) {
        (Some(p), true) => Some(pipeline::reference_idf(&prepared, p.as_ref(), normalize)?),
        (None, true) => return Err(MreError::Config("--idf needs --embeddings".into())),
        _ => None,
    };

    let stemmer = EnglishStemmer::default();
    let mut evaluator = Evaluator::new()
        .with_normalize(normalize)
        .with_smoothing(if args.bleu_smoothing { Smoothing::AddOne } else { Smoothing::None })
        .with_meteor(MeteorParams::default(), args.meteor_stem.then_some(&stemmer as _))
        .with_bertscore_options(BertScoreOptions { idf: idf.as_ref(), baseline: args.baseline })
        .with_mover_options(MoverOptions { idf: idf.as_ref(), ..MoverOptions::default() });
    if let Some(p) = &provider {
        evaluator = evaluator.with_embeddings(p.as_ref());
    }
    for (label, scorer) in &scorers {
        evaluator = evaluator.with_external(label.clone(), scorer);
    }
    for metric in &metrics {
        evaluator.check(metric)?;
    }

    let records = pipeline::score(&prepared, &evaluator, &metrics, args.jobs).map_err(|failures| {
        MreError::Failures { what: "score(s)", items: failures.iter().map(ToString::to_string).collect() }
    })?;
    write_records(&args.out, &records)?;
    log::info!("scored {} candidate(s) into {}", records.len(), args.out.display());
    Ok(())
}

fn metrics_or_all(requested: &[MetricId], records: &[mre_core::EvaluationRecord]) -> Vec<MetricId> {
    if !requested.is_empty() {
        return requested.to_vec();
    }
    let all: std::collections::BTreeSet<&MetricId> = records.iter().flat_map(|r| r.scores.keys()).collect();
    all.into_iter().cloned().collect()
}

fn correlate(args: CorrelateArgs) -> Result<()> {
    require_file(&args.scored)?;
    require_output(&args.out, &[&args.scored])?;
    let table = sibling(&args.out, "txt")?;
    require_output(&table, &[&args.scored])?;

    let records = read_records(&args.scored)?;
    let metrics = metrics_or_all(&args.metrics, &records);
    let mut deltas = delta_report(&records);
    deltas.metrics.retain(|m, _| metrics.contains(m));
    let output = CorrelateOutput { correlations: correlation_report(&records, &metrics), deltas };

    let json = serde_json::to_string_pretty(&output).expect("report json");
    write_text(&args.out, &(json + "\n"))?;
    write_text(&table, &format!("{}\n{}", output.correlations, output.deltas))?;
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    require_file(&args.scored)?;
    require_output(&args.out, &[&args.scored])?;
    let tsv = sibling(&args.out, "tsv")?;
    require_output(&tsv, &[&args.scored])?;
    if args.sizes.is_empty() {
        return Err(MreError::Config("--sizes is empty".into()));
    }

    let records = read_records(&args.scored)?;
    let metrics = metrics_or_all(&args.metrics, &records);
    let reports = metrics
        .iter()
        .map(|m| n_sweep_records(m, &records, &args.sizes))
        .collect::<mre_core::Result<Vec<SweepReport>>>()?;

    let json = serde_json::to_string_pretty(&reports).expect("sweep json");
    write_text(&args.out, &(json + "\n"))?;
    write_text(&tsv, &sweep_tsv(&reports))?;
    Ok(())
}

fn sweep_tsv(reports: &[SweepReport]) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
    let mut out = String::from("metric\trefs\tpearson\tspearman\tshort_records\n");
    for r in reports {
        out += &format!("{}\tsre\t{}\t{}\t0\n", r.metric, cell(r.sre.pearson), cell(r.sre.spearman));
        for p in &r.points {
            out += &format!(
                "{}\t{}\t{}\t{}\t{}\n",
                r.metric,
                p.size,
                cell(p.correlation.pearson),
                cell(p.correlation.spearman),
                p.short_records
            );
        }
    }
    out
}

fn synthesize(args: SynthArgs) -> Result<()> {
    let config = args.generator.config()?;
    let paths = synth::write(&args.out, args.seed, args.contexts, &config)?;
    log::info!("wrote {} and {}", paths.dataset.display(), paths.fixtures.display());
    Ok(())
}
