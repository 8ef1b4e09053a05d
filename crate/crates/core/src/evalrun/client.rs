//! JSON-over-HTTP completion client.
//!
//! Request body: `{"model", "prompt", "max_tokens", "temperature"}`.
//! The response text is read from `choices[0].text` (OpenAI completions
//! style), falling back to a top-level `text` or `completion` field.

use std::future::Future;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const TOKEN_ENV: &str = "CROSSLING_TOKEN";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub max_new_tokens: u32,
    pub temperature: f64,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            max_new_tokens: 64,
            temperature: 0.0,
        }
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    /// Appended to `base_url`.
    pub path: String,
    /// Never serialized into snapshots.
    #[serde(skip_serializing)]
    pub auth_token: Option<String>,
    /// Sent as the request's `model` field; defaults to the evaluated model id.
    pub model: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub max_concurrency: usize,
    pub backoff_ms: u64,
    pub decode_params: DecodeParams,
}

impl std::fmt::Debug for EndpointConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EndpointConfig")
            .field("base_url", &self.base_url)
            .field("path", &self.path)
            .field(
                "auth_token",
                &self.auth_token.as_ref().map(|_| "<redacted>"),
            )
            .field("model", &self.model)
            .field("timeout_ms", &self.timeout_ms)
            .field("max_retries", &self.max_retries)
            .field("max_concurrency", &self.max_concurrency)
            .field("backoff_ms", &self.backoff_ms)
            .field("decode_params", &self.decode_params)
            .finish()
    }
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://127.0.0.1:8000".into(),
            path: "/v1/completions".into(),
            auth_token: None,
            model: None,
            timeout_ms: 60_000,
            max_retries: 3,
            max_concurrency: 4,
            backoff_ms: 250,
            decode_params: DecodeParams::default(),
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timeout_ms == 0 {
            return Err(Error::InvalidArgument("timeout_ms must be positive".into()));
        }
        if self.max_concurrency == 0 {
            return Err(Error::InvalidArgument(
                "max_concurrency must be at least 1".into(),
            ));
        }
        if self.decode_params.temperature.is_nan() || self.decode_params.temperature < 0.0 {
            return Err(Error::InvalidArgument(
                "temperature must be non-negative".into(),
            ));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(Error::InvalidArgument(format!(
                "base_url {:?} is not an http(s) URL",
                self.base_url
            )));
        }
        Ok(())
    }

    /// Fill the token from `CROSSLING_TOKEN` when none is configured.
    pub fn with_env_token(mut self) -> Self {
        if self.auth_token.is_none() {
            self.auth_token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
        }
        self
    }

    pub fn url(&self) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), self.path)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub latency_ms: u64,
    pub attempts: u32,
}

/// Anything that turns a prompt into a completion.
pub trait Completer: Sync {
    fn complete(&self, prompt: &str) -> impl Future<Output = Result<Completion>> + Send;
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: u32,
    temperature: f64,
}

enum Failure {
    Transient(String),
    Fatal(Error),
}

pub struct HttpCompleter {
    client: reqwest::Client,
    config: EndpointConfig,
    model: String,
}

impl HttpCompleter {
    pub fn new(config: EndpointConfig, model_id: &str) -> Result<Self> {
        config.validate()?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| Error::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        let model = config.model.clone().unwrap_or_else(|| model_id.to_string());
        Ok(HttpCompleter {
            client,
            config,
            model,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    async fn attempt(&self, prompt: &str) -> std::result::Result<String, Failure> {
        let body = CompletionRequest {
            model: &self.model,
            prompt,
            max_tokens: self.config.decode_params.max_new_tokens,
            temperature: self.config.decode_params.temperature,
        };
        let mut request = self.client.post(self.config.url()).json(&body);
        if let Some(token) = &self.config.auth_token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .await
            .map_err(|e| Failure::Transient(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .await
            .map_err(|e| Failure::Transient(e.to_string()))?;
        if status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408 {
            return Err(Failure::Transient(format!(
                "status {status}: {}",
                excerpt(&text)
            )));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(Error::Protocol {
                status: status.as_u16(),
                body: excerpt(&text),
            }));
        }
        extract_text(&text).ok_or_else(|| {
            Failure::Fatal(Error::Protocol {
                status: status.as_u16(),
                body: format!("no completion text in response: {}", excerpt(&text)),
            })
        })
    }
}

impl Completer for HttpCompleter {
    /// Retries transient failures (connection errors, timeouts, 5xx, 408,
    /// 429) with exponential backoff; never retries other 4xx.
    async fn complete(&self, prompt: &str) -> Result<Completion> {
        let start = Instant::now();
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(prompt).await {
                Ok(text) => {
                    return Ok(Completion {
                        text,
                        latency_ms: start.elapsed().as_millis() as u64,
                        attempts,
                    })
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(message)) => {
                    if attempts > self.config.max_retries {
                        return Err(Error::Transport { attempts, message });
                    }
                    let delay = self
                        .config
                        .backoff_ms
                        .saturating_mul(1 << (attempts - 1).min(16));
                    log::debug!("attempt {attempts} failed ({message}); retrying in {delay} ms");
                    tokio::time::sleep(Duration::from_millis(delay)).await;
                }
            }
        }
    }
}

fn excerpt(body: &str) -> String {
    const LIMIT: usize = 200;
    match body.char_indices().nth(LIMIT) {
        Some((i, _)) => format!("{}…", &body[..i]),
        None => body.to_string(),
    }
}

fn extract_text(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.pointer("/choices/0/text")
        .or_else(|| v.get("text"))
        .or_else(|| v.get("completion"))
        .and_then(Value::as_str)
        .map(str::to_string)
}
