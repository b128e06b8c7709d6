//! OpenAI-compatible chat-completions and embeddings client with
//! retry/backoff, strict-JSON extraction, and a fully scriptable mock.

pub mod mock;
pub mod openai;

use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig, ProviderKind, RetryPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, Serialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

/// One chat-completions request; serializes directly to the wire body.
#[derive(Debug, Clone, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, system: impl Into<String>, user: impl Into<String>) -> Self {
        ChatRequest {
            model: model.into(),
            messages: vec![
                Message { role: Role::System, content: system.into() },
                Message { role: Role::User, content: user.into() },
            ],
            temperature: 0.0,
        }
    }

    /// Content of the last user message, if any.
    pub fn last_user_content(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }
}

/// A single failed exchange with the backend, before retry classification.
#[derive(Debug, Error)]
pub enum TransportError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("http status {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("malformed response body: {0}")]
    Malformed(String),
}

impl TransportError {
    /// Transport failures, HTTP 5xx, 429, and malformed bodies are retried;
    /// other 4xx are permanent.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Transport(_) | TransportError::Malformed(_) => true,
            TransportError::HttpStatus { status, .. } => {
                *status == 429 || (500..=599).contains(status)
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("llm request failed after {attempts} attempt(s): {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("{0}")]
    Config(#[from] ConfigError),
}

/// Raw exchange layer beneath the retrying client. Implementations: the
/// OpenAI-compatible HTTP backend and the offline mock.
pub trait Transport: Send + Sync {
    fn send_chat(&self, request: &ChatRequest) -> Result<String, TransportError>;
    fn send_embeddings(&self, model: &str, inputs: &[String]) -> Result<Vec<Vec<f64>>, TransportError>;
    fn name(&self) -> &'static str;
}

/// Sleep abstraction so tests can observe backoff without waiting.
pub trait Sleeper: Send + Sync {
    fn sleep(&self, duration: Duration);
}

struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, duration: Duration) {
        if !duration.is_zero() {
            std::thread::sleep(duration);
        }
    }
}

/// Outcome of one `complete_chat` call. `content` is `None` when the call
/// degraded (every attempt failed or a permanent error occurred).
#[derive(Debug, Clone, PartialEq)]
pub struct ChatOutcome {
    pub content: Option<String>,
    pub attempts: u32,
}

/// Retrying client over a [`Transport`].
pub struct LlmClient {
    transport: Arc<dyn Transport>,
    policy: RetryPolicy,
    sleeper: Arc<dyn Sleeper>,
}

impl LlmClient {
    pub fn new(transport: Arc<dyn Transport>, policy: RetryPolicy) -> Self {
        LlmClient {
            transport,
            policy,
            sleeper: Arc::new(ThreadSleeper),
        }
    }

    pub fn with_sleeper(
        transport: Arc<dyn Transport>,
        policy: RetryPolicy,
        sleeper: Arc<dyn Sleeper>,
    ) -> Self {
        LlmClient { transport, policy, sleeper }
    }

    /// Build the client a [`PipelineConfig`] describes.
    pub fn from_config(config: &PipelineConfig) -> Result<Self, LlmError> {
        let transport: Arc<dyn Transport> = match config.provider {
            ProviderKind::Mock => match &config.mock_script {
                Some(path) => Arc::new(mock::MockTransport::from_script_file(path).map_err(
                    |e| {
                        LlmError::Config(ConfigError::Invalid {
                            name: "--mock-script".into(),
                            reason: e,
                        })
                    },
                )?),
                None => Arc::new(mock::MockTransport::synthesizing()),
            },
            ProviderKind::OpenAi | ProviderKind::OpenAiCompatible => {
                let base_url = match (&config.base_url, config.provider) {
                    (Some(url), _) => url.clone(),
                    (None, ProviderKind::OpenAi) => "https://api.openai.com/v1".into(),
                    (None, _) => {
                        return Err(LlmError::Config(ConfigError::Invalid {
                            name: "LLM_BASE_URL".into(),
                            reason: "required for provider openai_compatible".into(),
                        }))
                    }
                };
                Arc::new(openai::OpenAiCompatible::new(base_url, config.api_key.clone()))
            }
        };
        Ok(LlmClient::new(transport, config.retry))
    }

    pub fn provider_name(&self) -> &'static str {
        self.transport.name()
    }

    /// One enrichment exchange: returns the assistant content, or `None`
    /// after the retry budget is spent or a permanent error occurs. Never
    /// raises to the pipeline.
    pub fn complete_chat(&self, request: &ChatRequest) -> ChatOutcome {
        debug_assert!(!request.messages.is_empty());
        for attempt in 1..=self.policy.max_attempts {
            match self.transport.send_chat(request) {
                Ok(content) => {
                    return ChatOutcome { content: Some(content), attempts: attempt };
                }
                Err(err) if !err.is_retryable() => {
                    log::warn!("chat call failed permanently: {err}");
                    return ChatOutcome { content: None, attempts: attempt };
                }
                Err(err) => {
                    log::warn!(
                        "chat call attempt {attempt}/{} failed: {err}",
                        self.policy.max_attempts
                    );
                    if attempt < self.policy.max_attempts {
                        self.sleeper.sleep(self.policy.delay_after(attempt));
                    }
                }
            }
        }
        ChatOutcome { content: None, attempts: self.policy.max_attempts }
    }

    /// Embed each input text, in order, L2-normalized so inner product
    /// equals cosine similarity. Unlike chat, exhaustion is an error.
    pub fn embed_texts(&self, texts: &[String], model: &str) -> Result<Vec<Vec<f64>>, LlmError> {
        if texts.is_empty() {
            return Err(LlmError::InvalidRequest("embed_texts requires at least one input".into()));
        }
        let mut last_err = String::new();
        for attempt in 1..=self.policy.max_attempts {
            match self.transport.send_embeddings(model, texts) {
                Ok(vectors) => {
                    if vectors.len() != texts.len() {
                        return Err(LlmError::Exhausted {
                            attempts: attempt,
                            last: format!(
                                "embedding count mismatch: {} inputs, {} vectors",
                                texts.len(),
                                vectors.len()
                            ),
                        });
                    }
                    let mut normalized = Vec::with_capacity(vectors.len());
                    for v in vectors {
                        normalized.push(l2_normalize(v).map_err(|e| LlmError::Exhausted {
                            attempts: attempt,
                            last: e,
                        })?);
                    }
                    return Ok(normalized);
                }
                Err(err) if !err.is_retryable() => {
                    return Err(LlmError::Exhausted { attempts: attempt, last: err.to_string() });
                }
                Err(err) => {
                    log::warn!(
                        "embeddings attempt {attempt}/{} failed: {err}",
                        self.policy.max_attempts
                    );
                    last_err = err.to_string();
                    if attempt < self.policy.max_attempts {
                        self.sleeper.sleep(self.policy.delay_after(attempt));
                    }
                }
            }
        }
        Err(LlmError::Exhausted { attempts: self.policy.max_attempts, last: last_err })
    }
}

fn l2_normalize(v: Vec<f64>) -> Result<Vec<f64>, String> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm <= f64::EPSILON {
        return Err("embedding vector has zero or non-finite norm".into());
    }
    Ok(v.into_iter().map(|x| x / norm).collect())
}

#[derive(Debug, Error, PartialEq)]
pub enum JsonExtractError {
    #[error("no JSON object found in response")]
    NoJson,
    #[error("response JSON failed to parse: {0}")]
    Parse(String),
}

/// Pull a JSON object out of an LLM response: strip a surrounding code
/// fence if present, otherwise take the first '{' through the last '}'.
pub fn extract_json(raw: &str) -> Result<serde_json::Value, JsonExtractError> {
    let mut candidate = raw.trim();

    if candidate.starts_with("```") {
        // Drop the opening fence line and a trailing fence line.
        candidate = candidate
            .split_once('\n')
            .map(|(_, rest)| rest)
            .unwrap_or("");
        if let Some(idx) = candidate.rfind("```") {
            candidate = &candidate[..idx];
        }
        candidate = candidate.trim();
    }

    let start = candidate.find('{').ok_or(JsonExtractError::NoJson)?;
    let end = candidate.rfind('}').ok_or(JsonExtractError::NoJson)?;
    if end < start {
        return Err(JsonExtractError::NoJson);
    }
    serde_json::from_str(&candidate[start..=end])
        .map_err(|e| JsonExtractError::Parse(e.to_string()))
}
