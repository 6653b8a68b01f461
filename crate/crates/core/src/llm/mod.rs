//! Backend contract for obtaining completions, plus deterministic offline
//! backends, an HTTP chat-completion client, and a content-addressed
//! response cache for exact replay.

mod cache;
mod http;
mod offline;

use std::time::Duration;

use thiserror::Error;

pub use cache::{CachedResponse, ResponseCache};
pub use http::{HttpBackend, HttpConfig};
pub use offline::{EchoBackend, PlannerBackend, PromptFacts, RandomWalkBackend, ReplayBackend};

use crate::prompt::PromptBundle;

/// One query to a backend: the rendered prompt plus the sampling knobs
/// that identify the completion for caching.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRequest {
    pub prompt: PromptBundle,
    /// Per-query randomness handle r_k; offline backends derive their
    /// output from it, HTTP backends forward it when configured to.
    pub seed: u64,
    pub temperature: f64,
    pub model: String,
}

/// A completion, with the raw text preserved byte-exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResponse {
    pub raw_text: String,
    pub backend: String,
    pub model: String,
    pub latency: Duration,
    pub cached: bool,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no cached response for key {key}")]
    CacheMiss { key: String },

    #[error("credential environment variable {var} is not set")]
    MissingCredential { var: String },

    #[error("HTTP status {status} after {attempts} attempt(s): {message}")]
    Http { status: u16, attempts: u32, message: String },

    #[error("rate limited (HTTP 429) after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },

    #[error("network failure after {attempts} attempt(s): {message}")]
    Network { attempts: u32, message: String },

    #[error("malformed completion payload: {0}")]
    MalformedResponse(String),

    #[error("backend has no reference for {0}")]
    UnknownPair(String),

    #[error("prompt lacks a readable {0} section")]
    UnreadablePrompt(&'static str),

    #[error("cache I/O failed: {0}")]
    CacheIo(#[from] std::io::Error),
}

/// A completion source. Implementations must be shareable across
/// evaluation workers.
pub trait Backend: Send + Sync {
    /// Short label naming the backend kind in records and reports.
    fn name(&self) -> &str;

    fn complete(&self, request: &QueryRequest) -> Result<QueryResponse, BackendError>;
}

/// Wraps a backend with read-through caching: hits skip the inner
/// backend entirely, misses are completed and persisted before returning.
pub struct CachingBackend<B> {
    inner: B,
    cache: ResponseCache,
}

impl<B: Backend> CachingBackend<B> {
    pub fn new(inner: B, cache: ResponseCache) -> Self {
        Self { inner, cache }
    }
}

impl<B: Backend> Backend for CachingBackend<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, request: &QueryRequest) -> Result<QueryResponse, BackendError> {
        if let Some(hit) = self.cache.load(request)? {
            return Ok(hit);
        }
        let response = self.inner.complete(request)?;
        self.cache.store(request, &response)?;
        Ok(response)
    }
}

impl Backend for Box<dyn Backend> {
    fn name(&self) -> &str {
        self.as_ref().name()
    }

    fn complete(&self, request: &QueryRequest) -> Result<QueryResponse, BackendError> {
        self.as_ref().complete(request)
    }
}
