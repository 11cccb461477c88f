use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{LabelerError, Result};

/// Where and how to reach the completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    /// Name of the environment variable holding a bearer token. The token
    /// itself is read at request time and never stored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token_env_var: Option<String>,
    #[serde(default = "default_timeout")]
    pub request_timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    pub cache_dir: PathBuf,
    /// Serve from the cache only.
    #[serde(default)]
    pub offline: bool,
}

fn default_timeout() -> u64 {
    30_000
}
fn default_retries() -> u32 {
    2
}
fn default_backoff() -> u64 {
    250
}
fn default_in_flight() -> usize {
    4
}
fn default_max_tokens() -> u32 {
    8
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, cache_dir: impl Into<PathBuf>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            auth_token_env_var: None,
            request_timeout_ms: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            max_in_flight: default_in_flight(),
            max_tokens: default_max_tokens(),
            cache_dir: cache_dir.into(),
            offline: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.request_timeout_ms == 0 {
            return Err(LabelerError::Config("request timeout must be > 0".into()));
        }
        if self.max_in_flight == 0 {
            return Err(LabelerError::Config("max_in_flight must be >= 1".into()));
        }
        if !self.offline && self.base_url.trim().is_empty() {
            return Err(LabelerError::Config("base_url is empty".into()));
        }
        Ok(())
    }

    /// Everything that changes what the endpoint would answer; part of the cache key.
    pub fn identity(&self) -> String {
        format!(
            "{}\nmax_tokens={}\ntemperature=0",
            self.base_url, self.max_tokens
        )
    }
}

/// Anything that turns a prompt into a completion.
pub trait Completer: Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
    max_tokens: u32,
    temperature: f64,
}

#[derive(Deserialize)]
struct CompletionReply {
    text: String,
}

/// JSON POST `{prompt, max_tokens, temperature: 0}` expecting `{text}` back.
pub struct HttpCompleter {
    client: reqwest::blocking::Client,
    config: EndpointConfig,
}

impl HttpCompleter {
    pub fn new(config: EndpointConfig) -> Result<Self> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.request_timeout_ms))
            .build()
            .map_err(|e| LabelerError::Config(format!("http client: {e}")))?;
        Ok(HttpCompleter { client, config })
    }

    fn once(&self, prompt: &str, token: Option<&str>) -> Result<String> {
        let body = CompletionRequest {
            prompt,
            max_tokens: self.config.max_tokens,
            temperature: 0.0,
        };
        let mut req = self.client.post(&self.config.base_url).json(&body);
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        let resp = req
            .send()
            .map_err(|e| LabelerError::Request(e.without_url().to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(LabelerError::Request(format!("HTTP status {status}")));
        }
        let text = resp
            .text()
            .map_err(|e| LabelerError::Request(e.without_url().to_string()))?;
        let reply: CompletionReply =
            serde_json::from_str(&text).map_err(|e| LabelerError::MalformedReply(e.to_string()))?;
        Ok(reply.text)
    }
}

impl Completer for HttpCompleter {
    fn complete(&self, prompt: &str) -> Result<String> {
        let token = match &self.config.auth_token_env_var {
            Some(var) => {
                Some(std::env::var(var).map_err(|_| LabelerError::MissingToken(var.clone()))?)
            }
            None => None,
        };
        let mut attempt = 0;
        loop {
            match self.once(prompt, token.as_deref()) {
                Err(e) if e.is_transient() && attempt < self.config.max_retries => {
                    log::warn!("request attempt {} failed: {e}", attempt + 1);
                    thread::sleep(Duration::from_millis(
                        self.config.backoff_ms.saturating_mul(1 << attempt.min(16)),
                    ));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}
