//! SPARQL protocol client with an LRU/TTL result cache.

use std::fmt;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use lru::LruCache;
use reqwest::StatusCode;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;
use tracing::{debug, warn};

use crate::model::{ResultSet, Row, Term};

pub const DEFAULT_ENDPOINT: &str = "https://query.wikidata.org/sparql";
pub const DEFAULT_USER_AGENT: &str =
    concat!("scholia-rs/", env!("CARGO_PKG_VERSION"), " (scholarly profile engine)");
pub const SPARQL_RESULTS_JSON: &str = "application/sparql-results+json";

/// Queries at or above this size are sent as form-encoded POST.
const GET_LIMIT_BYTES: usize = 2000;

#[derive(Debug, Error)]
pub enum SparqlError {
    #[error("empty query")]
    EmptyQuery,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("malformed results at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
}

fn parse_error(path: impl Into<String>, message: impl Into<String>) -> SparqlError {
    SparqlError::Parse {
        path: path.into(),
        message: message.into(),
    }
}

/// A SPARQL query together with the digest of its whitespace-normalized form.
#[derive(Clone, PartialEq, Eq)]
pub struct QueryText {
    text: String,
    canonical_hash: [u8; 32],
}

/// Collapses every run of whitespace to one space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl QueryText {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let canonical_hash = Sha256::digest(normalize_whitespace(&text).as_bytes()).into();
        QueryText {
            text,
            canonical_hash,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }

    pub fn normalized(&self) -> String {
        normalize_whitespace(&self.text)
    }

    pub fn canonical_hash(&self) -> [u8; 32] {
        self.canonical_hash
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(self.canonical_hash)
    }
}

impl fmt::Debug for QueryText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QueryText")
            .field("hash", &&self.hash_hex()[..12])
            .field("text", &self.text)
            .finish()
    }
}

impl fmt::Display for QueryText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    pub base_url: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub user_agent: String,
    pub cache_ttl: Duration,
    pub cache_capacity: usize,
    /// First retry delay; doubled on every further attempt.
    pub retry_backoff: Duration,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: DEFAULT_ENDPOINT.to_string(),
            timeout: Duration::from_secs(30),
            max_retries: 2,
            user_agent: DEFAULT_USER_AGENT.to_string(),
            cache_ttl: Duration::from_secs(300),
            cache_capacity: 1024,
            retry_backoff: Duration::from_millis(250),
        }
    }
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            ..EndpointConfig::default()
        }
    }

    /// Defaults overridden by `SCHOLIA_ENDPOINT` and `SCHOLIA_CACHE_TTL`.
    pub fn from_env() -> Result<Self, SparqlError> {
        let mut config = EndpointConfig::default();
        if let Ok(url) = std::env::var("SCHOLIA_ENDPOINT") {
            config.base_url = url;
        }
        if let Ok(ttl) = std::env::var("SCHOLIA_CACHE_TTL") {
            let secs: u64 = ttl.trim().parse().map_err(|_| {
                SparqlError::Config(format!("SCHOLIA_CACHE_TTL must be whole seconds, got {ttl:?}"))
            })?;
            config.cache_ttl = Duration::from_secs(secs);
        }
        Ok(config)
    }

    fn validate(&self) -> Result<(), SparqlError> {
        if self.timeout.is_zero() {
            return Err(SparqlError::Config("timeout must be positive".into()));
        }
        url::Url::parse(&self.base_url)
            .map_err(|e| SparqlError::Config(format!("base_url {:?}: {e}", self.base_url)))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheStatus {
    Hit,
    Miss,
}

struct CacheEntry {
    stored: Instant,
    results: Arc<ResultSet>,
}

/// Shareable SPARQL client. Clones share the cache and connection pool.
#[derive(Clone)]
pub struct SparqlClient {
    inner: Arc<ClientInner>,
}

struct ClientInner {
    config: EndpointConfig,
    http: reqwest::Client,
    cache: Option<Mutex<LruCache<[u8; 32], CacheEntry>>>,
    network_requests: AtomicU64,
}

impl SparqlClient {
    pub fn new(config: EndpointConfig) -> Result<Self, SparqlError> {
        config.validate()?;
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .user_agent(config.user_agent.clone())
            .build()
            .map_err(|e| SparqlError::Config(e.to_string()))?;
        let cache = match (config.cache_ttl.is_zero(), NonZeroUsize::new(config.cache_capacity)) {
            (false, Some(capacity)) => Some(Mutex::new(LruCache::new(capacity))),
            _ => None,
        };
        Ok(SparqlClient {
            inner: Arc::new(ClientInner {
                config,
                http,
                cache,
                network_requests: AtomicU64::new(0),
            }),
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.inner.config
    }

    /// Number of HTTP requests issued so far, retries included.
    pub fn network_requests(&self) -> u64 {
        self.inner.network_requests.load(Ordering::Relaxed)
    }

    pub async fn execute(&self, query: &QueryText) -> Result<Arc<ResultSet>, SparqlError> {
        self.execute_traced(query).await.map(|(results, _)| results)
    }

    /// Like [`execute`](Self::execute), also reporting whether the cache answered.
    pub async fn execute_traced(
        &self,
        query: &QueryText,
    ) -> Result<(Arc<ResultSet>, CacheStatus), SparqlError> {
        if query.as_str().trim().is_empty() {
            return Err(SparqlError::EmptyQuery);
        }
        let key = query.canonical_hash();
        if let Some(hit) = self.cache_lookup(&key) {
            debug!(hash = %&query.hash_hex()[..12], "sparql cache hit");
            return Ok((hit, CacheStatus::Hit));
        }
        let body = self.fetch_with_retry(query).await?;
        let results = Arc::new(parse_results(&body)?);
        self.cache_store(key, results.clone());
        Ok((results, CacheStatus::Miss))
    }

    fn cache_lookup(&self, key: &[u8; 32]) -> Option<Arc<ResultSet>> {
        let cache = self.inner.cache.as_ref()?;
        let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
        let ttl = self.inner.config.cache_ttl;
        match cache.get(key) {
            Some(entry) if entry.stored.elapsed() < ttl => Some(entry.results.clone()),
            Some(_) => {
                cache.pop(key);
                None
            }
            None => None,
        }
    }

    fn cache_store(&self, key: [u8; 32], results: Arc<ResultSet>) {
        if let Some(cache) = &self.inner.cache {
            let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
            cache.put(
                key,
                CacheEntry {
                    stored: Instant::now(),
                    results,
                },
            );
        }
    }

    async fn fetch_with_retry(&self, query: &QueryText) -> Result<Vec<u8>, SparqlError> {
        let config = &self.inner.config;
        let mut attempt = 0;
        loop {
            let outcome = self.fetch_once(query).await;
            let retryable = match &outcome {
                Ok(_) => return outcome,
                Err(SparqlError::Transport(_)) => true,
                Err(SparqlError::Endpoint { status, .. }) => {
                    *status == 429 || (500..600).contains(status)
                }
                Err(_) => false,
            };
            if !retryable || attempt >= config.max_retries {
                return outcome;
            }
            let delay = config.retry_backoff.saturating_mul(1 << attempt.min(16));
            warn!(attempt, ?delay, error = %outcome.as_ref().unwrap_err(), "retrying sparql request");
            tokio::time::sleep(delay).await;
            attempt += 1;
        }
    }

    async fn fetch_once(&self, query: &QueryText) -> Result<Vec<u8>, SparqlError> {
        let inner = &self.inner;
        inner.network_requests.fetch_add(1, Ordering::Relaxed);
        let request = if query.as_str().len() < GET_LIMIT_BYTES {
            inner
                .http
                .get(&inner.config.base_url)
                .query(&[("query", query.as_str())])
        } else {
            inner
                .http
                .post(&inner.config.base_url)
                .form(&[("query", query.as_str())])
        };
        let response = request
            .header(reqwest::header::ACCEPT, SPARQL_RESULTS_JSON)
            .send()
            .await
            .map_err(|e| SparqlError::Transport(e.to_string()))?;
        let status = response.status();
        let body = response
            .bytes()
            .await
            .map_err(|e| SparqlError::Transport(e.to_string()))?;
        if status != StatusCode::OK {
            return Err(SparqlError::Endpoint {
                status: status.as_u16(),
                body: String::from_utf8_lossy(&body).chars().take(2000).collect(),
            });
        }
        Ok(body.to_vec())
    }
}

/// Parses a SPARQL 1.1 Query Results JSON document.
pub fn parse_results(body: &[u8]) -> Result<ResultSet, SparqlError> {
    let doc: Value = serde_json::from_slice(body).map_err(|e| {
        parse_error(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let vars = doc
        .get("head")
        .and_then(|h| h.get("vars"))
        .and_then(Value::as_array)
        .ok_or_else(|| parse_error("head.vars", "missing or not an array"))?;
    let mut variables = Vec::with_capacity(vars.len());
    for (i, var) in vars.iter().enumerate() {
        let name = var
            .as_str()
            .ok_or_else(|| parse_error(format!("head.vars[{i}]"), "not a string"))?;
        if variables.iter().any(|v| v == name) {
            return Err(parse_error(format!("head.vars[{i}]"), "duplicate variable"));
        }
        variables.push(name.to_string());
    }
    let bindings = doc
        .get("results")
        .and_then(|r| r.get("bindings"))
        .and_then(Value::as_array)
        .ok_or_else(|| parse_error("results.bindings", "missing or not an array"))?;
    let mut rows = Vec::with_capacity(bindings.len());
    for (i, binding) in bindings.iter().enumerate() {
        let object = binding
            .as_object()
            .ok_or_else(|| parse_error(format!("results.bindings[{i}]"), "not an object"))?;
        let mut row = Row::new();
        for (name, value) in object {
            let path = format!("results.bindings[{i}].{name}");
            if !variables.iter().any(|v| v == name) {
                return Err(parse_error(path, "variable not declared in head.vars"));
            }
            row.insert(name.clone(), parse_term(value, &path)?);
        }
        rows.push(row);
    }
    Ok(ResultSet { variables, rows })
}

fn parse_term(value: &Value, path: &str) -> Result<Term, SparqlError> {
    let object = value
        .as_object()
        .ok_or_else(|| parse_error(path, "binding is not an object"))?;
    let field = |name: &str| -> Result<Option<&str>, SparqlError> {
        match object.get(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(parse_error(format!("{path}.{name}"), "not a string")),
        }
    };
    let kind = field("type")?.ok_or_else(|| parse_error(path, "missing type"))?;
    let lexical = field("value")?.ok_or_else(|| parse_error(path, "missing value"));
    match kind {
        "uri" => Ok(Term::Iri(lexical?.to_string())),
        "bnode" => Ok(Term::BlankNode(lexical?.to_string())),
        "literal" | "typed-literal" => Ok(Term::Literal {
            value: lexical?.to_string(),
            datatype: field("datatype")?.map(str::to_string),
            lang: field("xml:lang")?.map(str::to_string),
        }),
        other => Err(parse_error(
            format!("{path}.type"),
            format!("unsupported term type {other:?}"),
        )),
    }
}
