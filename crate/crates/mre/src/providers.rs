//! Embedding providers and external scorers backed by files or HTTP endpoints.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use mre_core::lexical::Stemmer;
use mre_core::textnorm::{normalize, TokenSequence};
use mre_core::{EmbeddingProvider, Embeddings, Error as CoreError, ExternalScorer};
use serde::{Deserialize, Serialize};

use crate::error::{MreError, Result};
use crate::jsonl;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// One line of an embedding file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub text: String,
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

/// Precomputed embeddings looked up by normalized text.
#[derive(Debug, Default)]
pub struct EmbeddingFile {
    entries: HashMap<String, Embeddings>,
}

impl EmbeddingFile {
    pub fn load(path: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        for (line, record) in jsonl::read::<EmbeddingRecord>(path)? {
            let embeddings = Embeddings::new(record.tokens, record.vectors).map_err(|e| MreError::Schema {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
            entries.entry(normalize(&record.text).joined()).or_insert(embeddings);
        }
        Ok(EmbeddingFile { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl EmbeddingProvider for EmbeddingFile {
    fn embed(&self, text: &TokenSequence) -> mre_core::Result<Embeddings> {
        let key = text.joined();
        self.entries.get(&key).cloned().ok_or_else(|| CoreError::Provider(format!("no embeddings for `{key}`")))
    }
}

fn client(timeout: Duration) -> Result<reqwest::blocking::Client> {
    reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| MreError::Config(format!("http client: {e}")))
}

fn transport_error(e: reqwest::Error) -> CoreError {
    CoreError::Transport(e.to_string())
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
    #[serde(default)]
    tokens: Option<Vec<String>>,
}

/// POSTs `{"text": ...}` and expects `{"vectors": [[...]], "tokens"?: [...]}`.
pub struct HttpEmbeddingProvider {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpEmbeddingProvider {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self> {
        Ok(HttpEmbeddingProvider { endpoint: endpoint.into(), client: client(timeout)? })
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn embed(&self, text: &TokenSequence) -> mre_core::Result<Embeddings> {
        let joined = text.joined();
        let response =
            self.client.post(&self.endpoint).json(&EmbedRequest { text: &joined }).send().map_err(transport_error)?;
        if !response.status().is_success() {
            return Err(CoreError::Protocol(format!("embedding endpoint returned {}", response.status())));
        }
        let body: EmbedResponse = response.json().map_err(|e| CoreError::Protocol(e.to_string()))?;
        let tokens = match body.tokens {
            Some(tokens) => tokens,
            None if body.vectors.len() == text.len() => text.tokens().to_vec(),
            None => (0..body.vectors.len()).map(|i| format!("#{i}")).collect(),
        };
        Embeddings::new(tokens, body.vectors)
    }
}

/// Memoizes another provider so repeated texts cost one lookup.
pub struct CachingProvider<P> {
    inner: P,
    cache: Mutex<HashMap<String, Embeddings>>,
}

impl<P> CachingProvider<P> {
    pub fn new(inner: P) -> Self {
        CachingProvider { inner, cache: Mutex::new(HashMap::new()) }
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachingProvider<P> {
    fn embed(&self, text: &TokenSequence) -> mre_core::Result<Embeddings> {
        let key = text.joined();
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let computed = self.inner.embed(text)?;
        self.cache.lock().expect("cache poisoned").insert(key, computed.clone());
        Ok(computed)
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    candidate: &'a str,
    reference: &'a str,
}

/// A learned metric behind an HTTP endpoint: POSTs
/// `{"candidate": ..., "reference": ...}` and reads `{"score": <real>}`.
pub struct HttpScorer {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpScorer {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self> {
        Ok(HttpScorer { endpoint: endpoint.into(), client: client(timeout)? })
    }
}

/// Extracts the `score` field from a scorer response body.
pub fn parse_score_response(body: &str) -> mre_core::Result<f64> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| CoreError::Protocol(format!("invalid JSON: {e}")))?;
    value
        .get("score")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| CoreError::Protocol("response has no numeric `score` field".into()))
}

impl ExternalScorer for HttpScorer {
    fn score(&self, candidate: &str, reference: &str) -> mre_core::Result<f64> {
        let response = self
            .client
            .post(&self.endpoint)
            .json(&ScoreRequest { candidate, reference })
            .send()
            .map_err(transport_error)?;
        let status = response.status();
        let body = response.text().map_err(transport_error)?;
        if !status.is_success() {
            return Err(CoreError::Protocol(format!("scorer returned {status}")));
        }
        parse_score_response(&body)
    }
}

/// Snowball English stemmer for METEOR's stem stage.
pub struct EnglishStemmer(rust_stemmers::Stemmer);

impl Default for EnglishStemmer {
    fn default() -> Self {
        EnglishStemmer(rust_stemmers::Stemmer::create(rust_stemmers::Algorithm::English))
    }
}

impl Stemmer for EnglishStemmer {
    fn stem(&self, word: &str) -> String {
        self.0.stem(word).into_owned()
    }
}
