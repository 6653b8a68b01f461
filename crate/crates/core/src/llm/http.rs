//! Chat-completion HTTP client: single user message in, first choice out,
//! with bounded exponential backoff and optional request pacing.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{Backend, BackendError, QueryRequest, QueryResponse};

/// Configuration for [`HttpBackend`].
#[derive(Debug, Clone)]
pub struct HttpConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    /// Model name sent in the request body.
    pub model: String,
    /// Environment variable holding the bearer token; `None` sends no
    /// Authorization header. The variable is read at request time so a
    /// missing credential fails with its name, not a silent 401.
    pub auth_env: Option<String>,
    pub timeout: Duration,
    /// Additional attempts after the first on retryable failures
    /// (HTTP 429, 5xx, transport errors).
    pub max_retries: u32,
    /// Minimum spacing between request starts, for provider rate limits.
    pub min_interval: Option<Duration>,
    /// Forward the request seed in the body (supported by some providers).
    pub send_seed: bool,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            auth_env: None,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            min_interval: None,
            send_seed: false,
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    last_start: Mutex<Option<Instant>>,
    backoff_base: Duration,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|err| BackendError::Network { attempts: 0, message: err.to_string() })?;
        Ok(Self {
            config,
            client,
            last_start: Mutex::new(None),
            backoff_base: Duration::from_millis(250),
        })
    }

    /// Override the first backoff delay (doubles per retry). Exposed so
    /// tests can exercise the retry path without real waits.
    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    fn pace(&self) {
        let Some(min_interval) = self.config.min_interval else { return };
        let mut last = self.last_start.lock().expect("pacing lock");
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < min_interval {
                std::thread::sleep(min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn bearer(&self) -> Result<Option<String>, BackendError> {
        match &self.config.auth_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| BackendError::MissingCredential { var: var.clone() }),
        }
    }

    fn extract_text(body: &Value) -> Option<&str> {
        let choice = body.get("choices")?.get(0)?;
        choice
            .pointer("/message/content")
            .or_else(|| choice.get("text"))?
            .as_str()
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&self, request: &QueryRequest) -> Result<QueryResponse, BackendError> {
        let token = self.bearer()?;
        let mut body = json!({
            "model": self.config.model,
            "messages": [{ "role": "user", "content": request.prompt.text }],
            "temperature": request.temperature,
        });
        if self.config.send_seed {
            body["seed"] = json!(request.seed);
        }

        let started = Instant::now();
        let attempts_allowed = self.config.max_retries + 1;
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.pace();
            let mut builder = self.client.post(&self.config.endpoint).json(&body);
            if let Some(token) = &token {
                builder = builder.bearer_auth(token);
            }
            let outcome = builder.send();

            let retryable_failure = match outcome {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let payload: Value = response.json().map_err(|err| {
                            BackendError::MalformedResponse(err.to_string())
                        })?;
                        let text = Self::extract_text(&payload).ok_or_else(|| {
                            BackendError::MalformedResponse(
                                "no choices[0].message.content in payload".to_string(),
                            )
                        })?;
                        return Ok(QueryResponse {
                            raw_text: text.to_string(),
                            backend: "http".to_string(),
                            model: self.config.model.clone(),
                            latency: started.elapsed(),
                            cached: false,
                        });
                    }
                    let message = response.text().unwrap_or_default();
                    if status.as_u16() == 429 {
                        BackendError::RateLimited { attempts: attempt }
                    } else if status.is_server_error() {
                        BackendError::Http { status: status.as_u16(), attempts: attempt, message }
                    } else {
                        // Client errors other than 429 will not improve
                        // with retries; surface them immediately.
                        return Err(BackendError::Http {
                            status: status.as_u16(),
                            attempts: attempt,
                            message,
                        });
                    }
                }
                Err(err) => BackendError::Network { attempts: attempt, message: err.to_string() },
            };

            if attempt >= attempts_allowed {
                return Err(retryable_failure);
            }
            let delay = self.backoff_base * 2u32.pow(attempt - 1);
            log::warn!(
                "attempt {attempt}/{attempts_allowed} failed ({retryable_failure}); retrying in {delay:?}"
            );
            std::thread::sleep(delay);
        }
    }
}
