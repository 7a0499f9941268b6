//! Paraphrase augmentation through a completion endpoint.
//!
//! A reference question is sent to the model with the paraphrase prompt, the
//! numbered list in the completion is parsed and de-duplicated, and the
//! result is cached by a digest of every input that affects it. Live
//! completions can be recorded to a fixtures directory and replayed later
//! without network access.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use mre_core::prompts::{build_prompt, parse_paraphrases, GenerationMode, PROMPT_TEMPLATE_VERSION};
use mre_core::textnorm::dedup_key;
use mre_core::ReferenceSet;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::refs::AugmentedRecord;

/// Environment variable holding the API key.
pub const API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("credential error: {0}")]
    Credential(String),
    #[error("transport error: {message}")]
    Transport { message: String, retryable: bool },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("no recorded completion for request {0}")]
    MissingFixture(String),
    #[error("generation failed for `{question}` after {attempts} attempt(s); {} partial paraphrase(s)", partial.len())]
    Generation { question: String, attempts: u32, partial: Vec<String> },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AugmentError {
    fn is_retryable(&self) -> bool {
        matches!(self, AugmentError::Transport { retryable: true, .. })
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        AugmentError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiStyle {
    /// `messages: [{role: user, content}]`, answer in `choices[0].message.content`.
    #[default]
    Chat,
    /// Legacy `prompt` field, answer in `choices[0].text`.
    Completion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub model: String,
    pub mode: GenerationMode,
    pub temperature: f64,
    pub n: usize,
    pub endpoint: String,
    pub api: ApiStyle,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            model: "text-davinci-003".into(),
            mode: GenerationMode::ZeroShot,
            temperature: 0.5,
            n: 20,
            endpoint: "https://api.openai.com/v1/completions".into(),
            api: ApiStyle::Completion,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("n must be at least 1".into());
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        Ok(())
    }

    /// Digest of every input that determines the generated set.
    pub fn cache_key(&self, question: &str) -> String {
        let material = format!(
            "v{PROMPT_TEMPLATE_VERSION}\n{}\n{}\n{}\n{}\n{}",
            self.model,
            self.mode,
            self.temperature,
            self.n,
            dedup_key(question)
        );
        hex::encode(Sha256::digest(material.as_bytes()))
    }

    pub fn request(&self, question: &str) -> CompletionRequest {
        CompletionRequest {
            model: self.model.clone(),
            temperature: self.temperature,
            prompt: build_prompt(question, self.mode, self.n),
            api: self.api,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub model: String,
    pub temperature: f64,
    pub prompt: String,
    pub api: ApiStyle,
}

impl CompletionRequest {
    /// The JSON body sent to the endpoint.
    pub fn body(&self) -> Value {
        match self.api {
            ApiStyle::Chat => json!({
                "model": self.model,
                "temperature": self.temperature,
                "messages": [{"role": "user", "content": self.prompt}],
            }),
            ApiStyle::Completion => json!({
                "model": self.model,
                "temperature": self.temperature,
                "prompt": self.prompt,
                "max_tokens": 1024,
            }),
        }
    }

    /// Fixture name for the `attempt`-th (0-based) send of this request.
    pub fn fixture_key(&self, attempt: u32) -> String {
        let body = serde_json::to_string(&self.body()).expect("json body");
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        format!("{}-{attempt}", &digest[..32])
    }
}

/// Pulls the generated text out of a chat or legacy completion response.
pub fn extract_completion(response: &Value) -> Result<String, AugmentError> {
    let choice = response
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| AugmentError::Protocol("response has no choices".into()))?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| AugmentError::Protocol("choice carries no text".into()))
}

/// Something that turns a completion request into completion text.
pub trait CompletionTransport: Sync {
    fn complete(&self, request: &CompletionRequest, attempt: u32) -> Result<String, AugmentError>;
}

/// Token bucket limiting request rate.
pub struct RateLimiter {
    state: Mutex<(f64, Instant)>,
    capacity: f64,
    per_second: f64,
}

impl RateLimiter {
    pub fn new(per_second: f64, burst: u32) -> Self {
        let capacity = f64::from(burst.max(1));
        RateLimiter { state: Mutex::new((capacity, Instant::now())), capacity, per_second }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("rate limiter poisoned");
                let now = Instant::now();
                let refill = now.duration_since(state.1).as_secs_f64() * self.per_second;
                state.0 = (state.0 + refill).min(self.capacity);
                state.1 = now;
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                (1.0 - state.0) / self.per_second
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Live HTTP transport. The API key is read from [`API_KEY_ENV`].
pub struct HttpCompletionClient {
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
    limiter: RateLimiter,
}

impl HttpCompletionClient {
    pub fn from_env(
        endpoint: impl Into<String>,
        timeout: Duration,
        requests_per_second: f64,
    ) -> Result<Self, AugmentError> {
        let api_key =
            std::env::var(API_KEY_ENV).map_err(|_| AugmentError::Credential(format!("{API_KEY_ENV} is not set")))?;
        Self::new(endpoint, api_key, timeout, requests_per_second)
    }

    pub fn new(
        endpoint: impl Into<String>,
        api_key: impl Into<String>,
        timeout: Duration,
        requests_per_second: f64,
    ) -> Result<Self, AugmentError> {
        if requests_per_second.is_nan() || requests_per_second <= 0.0 {
            return Err(AugmentError::Protocol(format!("request rate must be positive, got {requests_per_second}")));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AugmentError::Transport { message: e.to_string(), retryable: false })?;
        Ok(HttpCompletionClient {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            client,
            limiter: RateLimiter::new(requests_per_second, 1),
        })
    }
}

impl CompletionTransport for HttpCompletionClient {
    fn complete(&self, request: &CompletionRequest, _attempt: u32) -> Result<String, AugmentError> {
        self.limiter.acquire();
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&request.body())
            .send()
            .map_err(|e| AugmentError::Transport { message: e.to_string(), retryable: true })?;
        let status = response.status();
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(AugmentError::Credential(format!("endpoint returned {status}")));
        }
        if status == reqwest::StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(AugmentError::Transport { message: format!("endpoint returned {status}"), retryable: true });
        }
        if !status.is_success() {
            return Err(AugmentError::Protocol(format!("endpoint returned {status}")));
        }
        let body: Value = response.json().map_err(|e| AugmentError::Protocol(e.to_string()))?;
        extract_completion(&body)
    }
}

/// A recorded exchange, stored as `<fixtures>/<fixture_key>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub request: Value,
    pub attempt: u32,
    pub completion: String,
}

pub fn write_fixture(
    dir: &Path,
    request: &CompletionRequest,
    attempt: u32,
    completion: &str,
) -> Result<(), AugmentError> {
    fs::create_dir_all(dir).map_err(|e| AugmentError::io(dir, e))?;
    let path = dir.join(format!("{}.json", request.fixture_key(attempt)));
    let fixture = Fixture { request: request.body(), attempt, completion: completion.to_string() };
    let text = serde_json::to_string_pretty(&fixture).expect("fixture json");
    fs::write(&path, text + "\n").map_err(|e| AugmentError::io(&path, e))
}

/// Serves completions from recorded fixtures only.
pub struct ReplayTransport {
    dir: PathBuf,
}

impl ReplayTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayTransport { dir: dir.into() }
    }
}

impl CompletionTransport for ReplayTransport {
    fn complete(&self, request: &CompletionRequest, attempt: u32) -> Result<String, AugmentError> {
        let key = request.fixture_key(attempt);
        let path = self.dir.join(format!("{key}.json"));
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(AugmentError::MissingFixture(key)),
            Err(e) => return Err(AugmentError::io(&path, e)),
        };
        let fixture: Fixture =
            serde_json::from_str(&text).map_err(|e| AugmentError::Protocol(format!("{}: {e}", path.display())))?;
        if fixture.request != request.body() {
            return Err(AugmentError::Protocol(format!("{}: request does not match fixture", path.display())));
        }
        Ok(fixture.completion)
    }
}

/// Forwards to another transport and records every successful completion.
pub struct RecordingTransport<T> {
    inner: T,
    dir: PathBuf,
}

impl<T> RecordingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> Self {
        RecordingTransport { inner, dir: dir.into() }
    }
}

impl<T: CompletionTransport> CompletionTransport for RecordingTransport<T> {
    fn complete(&self, request: &CompletionRequest, attempt: u32) -> Result<String, AugmentError> {
        let completion = self.inner.complete(request, attempt)?;
        write_fixture(&self.dir, request, attempt, &completion)?;
        Ok(completion)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        RetryPolicy { max_attempts, base_delay: Duration::ZERO }
    }

    /// Exponential backoff with up to 100% additive jitter.
    fn delay(&self, attempt: u32) -> Duration {
        if self.base_delay.is_zero() {
            return Duration::ZERO;
        }
        let base = self.base_delay.saturating_mul(1 << attempt.min(10));
        let jitter = rand::rng().random_range(0.0..1.0);
        base.mul_f64(1.0 + jitter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub created_at: u64,
    #[serde(flatten)]
    pub record: AugmentedRecord,
    pub n: usize,
}

/// Append-only JSONL cache of generated reference sets.
///
/// Readers share a lock; writers append one line at a time under a mutex.
pub struct AugmentationCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, CacheEntry>>,
    writer: Mutex<()>,
}

impl AugmentationCache {
    pub fn in_memory() -> Self {
        AugmentationCache { path: None, entries: RwLock::new(HashMap::new()), writer: Mutex::new(()) }
    }

    pub fn open(path: impl Into<PathBuf>) -> Result<Self, AugmentError> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| AugmentError::io(&path, e))?;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| AugmentError::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CacheEntry = serde_json::from_str(&line)
                    .map_err(|e| AugmentError::Protocol(format!("{}:{}: {e}", path.display(), idx + 1)))?;
                entries.insert(entry.key.clone(), entry);
            }
        }
        Ok(AugmentationCache { path: Some(path), entries: RwLock::new(entries), writer: Mutex::new(()) })
    }

    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        self.entries.read().expect("cache poisoned").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&self, entry: CacheEntry) -> Result<(), AugmentError> {
        let _guard = self.writer.lock().expect("cache writer poisoned");
        if let Some(path) = &self.path {
            let mut file =
                OpenOptions::new().create(true).append(true).open(path).map_err(|e| AugmentError::io(path, e))?;
            let line = serde_json::to_string(&entry).expect("cache json");
            writeln!(file, "{line}").map_err(|e| AugmentError::io(path, e))?;
        }
        self.entries.write().expect("cache poisoned").insert(entry.key.clone(), entry);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub references: ReferenceSet,
    /// How many paraphrases short of `n` the set is, if any.
    pub shortfall: Option<usize>,
    pub from_cache: bool,
}

/// Generates (or fetches from cache) up to `config.n` paraphrases of `question`.
pub fn augment_reference(
    question: &str,
    config: &GeneratorConfig,
    transport: &dyn CompletionTransport,
    cache: &AugmentationCache,
    retry: &RetryPolicy,
) -> Result<Augmented, AugmentError> {
    let key = config.cache_key(question);
    if let Some(entry) = cache.get(&key) {
        let references = ReferenceSet::new(question, entry.record.paraphrases.iter().cloned());
        let shortfall = config.n.checked_sub(references.paraphrases().len()).filter(|&s| s > 0);
        return Ok(Augmented { references, shortfall, from_cache: true });
    }

    let request = config.request(question);
    let enough = config.n.div_ceil(2);
    let mut collected = ReferenceSet::original_only(question);
    let mut attempts = 0;
    while attempts < retry.max_attempts {
        let attempt = attempts;
        attempts += 1;
        match transport.complete(&request, attempt) {
            Ok(text) => {
                let mut all = collected.paraphrases().to_vec();
                all.extend(parse_paraphrases(&text));
                collected = ReferenceSet::new(question, all);
                if collected.paraphrases().len() >= enough {
                    break;
                }
                log::warn!(
                    "only {} paraphrase(s) parsed for `{question}` (want {enough}); retrying",
                    collected.paraphrases().len()
                );
            }
            Err(e) if e.is_retryable() => log::warn!("attempt {attempts} for `{question}` failed: {e}"),
            Err(AugmentError::MissingFixture(k)) if attempt > 0 => {
                log::warn!("no fixture for retry {attempt} of `{question}` ({k})");
                break;
            }
            Err(e) => return Err(e),
        }
        if attempts < retry.max_attempts {
            std::thread::sleep(retry.delay(attempt));
        }
    }

    if collected.paraphrases().len() < enough {
        return Err(AugmentError::Generation {
            question: question.to_string(),
            attempts,
            partial: collected.paraphrases().to_vec(),
        });
    }
    let mut paraphrases = collected.paraphrases().to_vec();
    paraphrases.truncate(config.n);
    let references = ReferenceSet::new(question, paraphrases);
    let shortfall = config.n.checked_sub(references.paraphrases().len()).filter(|&s| s > 0);

    let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    cache.insert(CacheEntry {
        key,
        created_at,
        record: AugmentedRecord::from_reference_set(&references, &config.model, config.mode, config.temperature),
        n: config.n,
    })?;
    Ok(Augmented { references, shortfall, from_cache: false })
}

/// Augments every distinct question (by cache key) at most once, on up to
/// `jobs` threads. Results come back in input order of first occurrence.
pub fn augment_all(
    questions: &[String],
    config: &GeneratorConfig,
    transport: &dyn CompletionTransport,
    cache: &AugmentationCache,
    retry: &RetryPolicy,
    jobs: usize,
) -> Vec<(String, Result<Augmented, AugmentError>)> {
    use rayon::prelude::*;

    let mut seen = std::collections::HashSet::new();
    let unique: Vec<&String> = questions.iter().filter(|q| seen.insert(config.cache_key(q))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    pool.install(|| {
        unique.par_iter().map(|q| ((*q).clone(), augment_reference(q, config, transport, cache, retry))).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Scripted {
        replies: Vec<Result<String, fn() -> AugmentError>>,
        calls: AtomicUsize,
        seen: Mutex<Vec<Value>>,
    }

    impl Scripted {
        fn new(replies: Vec<Result<String, fn() -> AugmentError>>) -> Self {
            Scripted { replies, calls: AtomicUsize::new(0), seen: Mutex::new(Vec::new()) }
        }
    }

    impl CompletionTransport for Scripted {
        fn complete(&self, request: &CompletionRequest, attempt: u32) -> Result<String, AugmentError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            assert_eq!(n as u32, attempt);
            self.seen.lock().unwrap().push(request.body());
            match &self.replies[n] {
                Ok(s) => Ok(s.clone()),
                Err(make) => Err(make()),
            }
        }
    }

    fn numbered(items: &[&str]) -> String {
        items.iter().enumerate().map(|(i, s)| format!("{}. {s}\n", i + 1)).collect()
    }

    fn config(n: usize) -> GeneratorConfig {
        GeneratorConfig { n, ..GeneratorConfig::default() }
    }

    #[test]
    fn request_body_carries_config_verbatim() {
        let cfg = GeneratorConfig::default();
        let body = cfg.request("Who is the girl?").body();
        assert_eq!(body["model"], "text-davinci-003");
        assert_eq!(body["temperature"], 0.5);
        assert_eq!(body["prompt"], "Please paraphrase the following sentence 20 times:\nWho is the girl?");
        let chat = GeneratorConfig { api: ApiStyle::Chat, model: "gpt-3.5-turbo".into(), ..cfg };
        let body = chat.request("Q?").body();
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"].as_str().unwrap().lines().last(), Some("Q?"));
    }

    #[test]
    fn cache_key_depends_on_every_input() {
        let base = config(20);
        let k = base.cache_key("Who is she?");
        assert_eq!(k, base.cache_key("who is SHE"));
        assert_eq!(k.len(), 64);
        for other in [
            GeneratorConfig { n: 19, ..base.clone() },
            GeneratorConfig { temperature: 0.7, ..base.clone() },
            GeneratorConfig { mode: GenerationMode::FewShot, ..base.clone() },
            GeneratorConfig { model: "x".into(), ..base.clone() },
        ] {
            assert_ne!(other.cache_key("Who is she?"), k);
        }
        // endpoint does not change what is generated
        assert_eq!(GeneratorConfig { endpoint: "http://other".into(), ..base.clone() }.cache_key("Who is she?"), k);
    }

    #[test]
    fn second_call_hits_cache() {
        let transport = Scripted::new(vec![Ok(numbered(&["A?", "B?", "Q?"]))]);
        let cache = AugmentationCache::in_memory();
        let first = augment_reference("Q?", &config(3), &transport, &cache, &RetryPolicy::no_delay(3)).unwrap();
        assert!(!first.from_cache);
        // the original is removed from the paraphrases
        assert_eq!(first.references.paraphrases(), &["A?".to_string(), "B?".to_string()]);
        assert_eq!(first.shortfall, Some(1));
        let second = augment_reference("Q?", &config(3), &transport, &cache, &RetryPolicy::no_delay(3)).unwrap();
        assert!(second.from_cache);
        assert_eq!(second.references, first.references);
        assert_eq!(transport.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn retries_until_enough_items() {
        let transport = Scripted::new(vec![
            Ok("I cannot do that.".into()),
            Err(|| AugmentError::Transport { message: "503".into(), retryable: true }),
            Ok(numbered(&["A?", "B?"])),
        ]);
        let cache = AugmentationCache::in_memory();
        let out = augment_reference("Q?", &config(4), &transport, &cache, &RetryPolicy::no_delay(3)).unwrap();
        assert_eq!(out.references.paraphrases().len(), 2);
        assert_eq!(out.shortfall, Some(2));
    }

    #[test]
    fn exhausted_retries_carry_partial() {
        let transport = Scripted::new(vec![Ok(numbered(&["A?"])), Ok(numbered(&["a"])), Ok(String::new())]);
        let cache = AugmentationCache::in_memory();
        match augment_reference("Q?", &config(20), &transport, &cache, &RetryPolicy::no_delay(3)) {
            Err(AugmentError::Generation { attempts, partial, .. }) => {
                assert_eq!(attempts, 3);
                assert_eq!(partial, vec!["A?".to_string()]);
            }
            other => panic!("{other:?}"),
        }
        assert!(cache.is_empty());
    }

    #[test]
    fn credential_failure_is_not_retried() {
        let transport = Scripted::new(vec![Err(|| AugmentError::Credential("401".into()))]);
        let cache = AugmentationCache::in_memory();
        let err = augment_reference("Q?", &config(2), &transport, &cache, &RetryPolicy::no_delay(3)).unwrap_err();
        assert!(matches!(err, AugmentError::Credential(_)));
        assert_eq!(transport.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let completion = numbered(&["A?", "B?"]);
        let recorder = RecordingTransport::new(Scripted::new(vec![Ok(completion.clone())]), dir.path());
        let cfg = config(2);
        let live = augment_reference("Q?", &cfg, &recorder, &AugmentationCache::in_memory(), &RetryPolicy::no_delay(3))
            .unwrap();
        let replay = ReplayTransport::new(dir.path());
        let again =
            augment_reference("Q?", &cfg, &replay, &AugmentationCache::in_memory(), &RetryPolicy::no_delay(3)).unwrap();
        assert_eq!(live.references, again.references);
        // a different request has no fixture
        let other =
            augment_reference("Other?", &cfg, &replay, &AugmentationCache::in_memory(), &RetryPolicy::no_delay(3));
        assert!(matches!(other, Err(AugmentError::MissingFixture(_))));
    }

    #[test]
    fn file_cache_persists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let transport = Scripted::new(vec![Ok(numbered(&["A?", "B?"]))]);
        {
            let cache = AugmentationCache::open(&path).unwrap();
            augment_reference("Q?", &config(2), &transport, &cache, &RetryPolicy::no_delay(1)).unwrap();
        }
        let cache = AugmentationCache::open(&path).unwrap();
        assert_eq!(cache.len(), 1);
        let hit = augment_reference("Q?", &config(2), &transport, &cache, &RetryPolicy::no_delay(1)).unwrap();
        assert!(hit.from_cache);
    }

    #[test]
    fn augment_all_dedups_in_flight() {
        let transport = Scripted::new(vec![Ok(numbered(&["A?", "B?"]))]);
        let cache = AugmentationCache::in_memory();
        let qs = vec!["Q?".to_string(), "q".to_string(), "Q?".to_string()];
        let out = augment_all(&qs, &config(2), &transport, &cache, &RetryPolicy::no_delay(1), 4);
        assert_eq!(out.len(), 1);
        assert_eq!(transport.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn completion_extraction() {
        let chat = json!({"choices": [{"message": {"role": "assistant", "content": "1. A"}}]});
        assert_eq!(extract_completion(&chat).unwrap(), "1. A");
        let legacy = json!({"choices": [{"text": "1. B"}]});
        assert_eq!(extract_completion(&legacy).unwrap(), "1. B");
        assert!(matches!(extract_completion(&json!({"error": "x"})), Err(AugmentError::Protocol(_))));
    }

    #[test]
    fn rate_limiter_spaces_requests() {
        let limiter = RateLimiter::new(50.0, 1);
        let start = Instant::now();
        for _ in 0..3 {
            limiter.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(35));
    }
}
