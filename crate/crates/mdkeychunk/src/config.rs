//! Pipeline configuration: defaults, environment overrides, CLI overrides.

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

/// Retry behaviour for LLM calls: exponential backoff with
/// `base_delay_secs * factor^(attempt-1)` between attempts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_secs: f64,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay_secs: 1.0,
            factor: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay to sleep after the given failed attempt (1-based).
    pub fn delay_after(&self, attempt: u32) -> std::time::Duration {
        let secs = self.base_delay_secs * self.factor.powi(attempt.saturating_sub(1) as i32);
        std::time::Duration::from_secs_f64(secs.max(0.0))
    }
}

/// Which backend serves chat and embedding requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    /// api.openai.com with the standard protocol.
    OpenAi,
    /// Any endpoint speaking the OpenAI-compatible protocol (Ollama, vLLM, ...).
    OpenAiCompatible,
    /// Offline scripted/synthesizing provider for tests and demos.
    Mock,
}

impl ProviderKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "openai" => Some(ProviderKind::OpenAi),
            "openai_compatible" | "openai-compatible" => Some(ProviderKind::OpenAiCompatible),
            "mock" => Some(ProviderKind::Mock),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ProviderKind::OpenAi => "openai",
            ProviderKind::OpenAiCompatible => "openai_compatible",
            ProviderKind::Mock => "mock",
        }
    }
}

/// All thresholds and endpoint settings for one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Minimum chunk size in characters.
    pub min_chunk_size: usize,
    /// Soft maximum chunk size in characters; single atomic blocks may exceed it.
    pub max_chunk_size: usize,
    /// Enable Stage 3 key-based merging.
    pub merge_by_keys: bool,
    /// Maximum merged chunk size in characters.
    pub max_merged_size: usize,
    /// Orphans smaller than this receive prepended section context.
    pub min_orphan_size: usize,
    /// Rolling key dictionary capacity.
    pub rolling_key_capacity: usize,
    /// Pass the rolling key dictionary into enrichment prompts.
    pub rolling_keys_enabled: bool,
    pub provider: ProviderKind,
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    pub model: String,
    pub embedding_model: String,
    pub retry: RetryPolicy,
    pub log_level: String,
    /// Scripted responses for the mock provider; without it the mock
    /// synthesizes deterministic enrichment from each prompt.
    pub mock_script: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            min_chunk_size: 100,
            max_chunk_size: 1500,
            merge_by_keys: true,
            max_merged_size: 3000,
            min_orphan_size: 200,
            rolling_key_capacity: 40,
            rolling_keys_enabled: true,
            provider: ProviderKind::OpenAi,
            base_url: None,
            api_key: None,
            model: "gpt-4o-mini".into(),
            embedding_model: "mxbai-embed-large".into(),
            retry: RetryPolicy::default(),
            log_level: "INFO".into(),
            mock_script: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid value for {name}: {reason}")]
    Invalid { name: String, reason: String },
    #[error("configuration constraint violated: {0}")]
    Constraint(String),
}

impl PipelineConfig {
    /// Check the threshold ordering and basic sanity constraints.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.min_chunk_size >= self.max_chunk_size {
            return Err(ConfigError::Constraint(format!(
                "MIN_CHUNK_SIZE ({}) must be smaller than MAX_CHUNK_SIZE ({})",
                self.min_chunk_size, self.max_chunk_size
            )));
        }
        if self.max_chunk_size >= self.max_merged_size {
            return Err(ConfigError::Constraint(format!(
                "MAX_CHUNK_SIZE ({}) must be smaller than MAX_MERGED_SIZE ({})",
                self.max_chunk_size, self.max_merged_size
            )));
        }
        if self.min_orphan_size == 0 {
            return Err(ConfigError::Constraint(
                "MIN_ORPHAN_SIZE must be greater than zero".into(),
            ));
        }
        if self.rolling_key_capacity == 0 {
            return Err(ConfigError::Constraint(
                "rolling key capacity must be at least 1".into(),
            ));
        }
        if self.retry.max_attempts == 0 {
            return Err(ConfigError::Constraint(
                "retry max_attempts must be at least 1".into(),
            ));
        }
        if self.retry.base_delay_secs < 0.0 || self.retry.factor < 0.0 {
            return Err(ConfigError::Constraint(
                "retry delays must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Optional overrides collected from CLI flags; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub min_chunk_size: Option<usize>,
    pub max_chunk_size: Option<usize>,
    pub merge_by_keys: Option<bool>,
    pub max_merged_size: Option<usize>,
    pub min_orphan_size: Option<usize>,
    pub rolling_key_capacity: Option<usize>,
    pub rolling_keys_enabled: Option<bool>,
    pub provider: Option<String>,
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub embedding_model: Option<String>,
    pub max_attempts: Option<u32>,
    pub log_level: Option<String>,
    pub mock_script: Option<PathBuf>,
}

fn parse_usize(name: &str, raw: &str) -> Result<usize, ConfigError> {
    raw.trim().parse().map_err(|_| ConfigError::Invalid {
        name: name.into(),
        reason: format!("expected a nonnegative integer, got {raw:?}"),
    })
}

fn parse_bool(name: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ConfigError::Invalid {
            name: name.into(),
            reason: format!("expected a boolean, got {raw:?}"),
        }),
    }
}

/// Build a [`PipelineConfig`] from defaults, then environment variables,
/// then CLI overrides (highest precedence). Validates the result.
pub fn load_config(
    env: &HashMap<String, String>,
    overrides: &ConfigOverrides,
) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = PipelineConfig::default();

    if let Some(v) = env.get("MIN_CHUNK_SIZE") {
        cfg.min_chunk_size = parse_usize("MIN_CHUNK_SIZE", v)?;
    }
    if let Some(v) = env.get("MAX_CHUNK_SIZE") {
        cfg.max_chunk_size = parse_usize("MAX_CHUNK_SIZE", v)?;
    }
    if let Some(v) = env.get("MERGE_BY_KEYS") {
        cfg.merge_by_keys = parse_bool("MERGE_BY_KEYS", v)?;
    }
    if let Some(v) = env.get("MAX_MERGED_SIZE") {
        cfg.max_merged_size = parse_usize("MAX_MERGED_SIZE", v)?;
    }
    if let Some(v) = env.get("MIN_ORPHAN_SIZE") {
        cfg.min_orphan_size = parse_usize("MIN_ORPHAN_SIZE", v)?;
    }
    if let Some(v) = env.get("LLM_PROVIDER") {
        cfg.provider = ProviderKind::parse(v).ok_or_else(|| ConfigError::Invalid {
            name: "LLM_PROVIDER".into(),
            reason: format!("unsupported provider {v:?} (expected openai, openai_compatible, or mock)"),
        })?;
    }
    if let Some(v) = env.get("LLM_API_KEY") {
        if !v.is_empty() {
            cfg.api_key = Some(v.clone());
        }
    }
    if let Some(v) = env.get("LLM_BASE_URL") {
        if !v.is_empty() {
            cfg.base_url = Some(v.clone());
        }
    }
    if let Some(v) = env.get("LLM_MODEL") {
        if !v.is_empty() {
            cfg.model = v.clone();
        }
    }
    if let Some(v) = env.get("LOG_LEVEL") {
        cfg.log_level = v.clone();
    }

    if let Some(v) = overrides.min_chunk_size {
        cfg.min_chunk_size = v;
    }
    if let Some(v) = overrides.max_chunk_size {
        cfg.max_chunk_size = v;
    }
    if let Some(v) = overrides.merge_by_keys {
        cfg.merge_by_keys = v;
    }
    if let Some(v) = overrides.max_merged_size {
        cfg.max_merged_size = v;
    }
    if let Some(v) = overrides.min_orphan_size {
        cfg.min_orphan_size = v;
    }
    if let Some(v) = overrides.rolling_key_capacity {
        cfg.rolling_key_capacity = v;
    }
    if let Some(v) = overrides.rolling_keys_enabled {
        cfg.rolling_keys_enabled = v;
    }
    if let Some(v) = &overrides.provider {
        cfg.provider = ProviderKind::parse(v).ok_or_else(|| ConfigError::Invalid {
            name: "--provider".into(),
            reason: format!("unsupported provider {v:?} (expected openai, openai_compatible, or mock)"),
        })?;
    }
    if let Some(v) = &overrides.base_url {
        cfg.base_url = Some(v.clone());
    }
    if let Some(v) = &overrides.model {
        cfg.model = v.clone();
    }
    if let Some(v) = &overrides.embedding_model {
        cfg.embedding_model = v.clone();
    }
    if let Some(v) = overrides.max_attempts {
        cfg.retry.max_attempts = v;
    }
    if let Some(v) = &overrides.log_level {
        cfg.log_level = v.clone();
    }
    if let Some(v) = &overrides.mock_script {
        cfg.mock_script = Some(v.clone());
    }

    cfg.validate()?;
    Ok(cfg)
}
