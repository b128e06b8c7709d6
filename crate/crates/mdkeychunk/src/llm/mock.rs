//! Offline provider: replays scripted responses and, once the script is
//! exhausted (or absent), synthesizes deterministic enrichment JSON from
//! the prompt itself. Embeddings are hash-derived, so identical texts map
//! to identical vectors. Everything is reproducible byte-for-byte.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{ChatRequest, Transport, TransportError};

/// One scripted chat response, consumed in order.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScriptedChat {
    /// Successful exchange returning this assistant content.
    Content { content: String },
    /// HTTP-level failure with this status code.
    Status { status: u16 },
    /// Connection-level failure.
    Transport { transport: String },
}

#[derive(Debug, Clone, Default, Deserialize)]
struct Script {
    #[serde(default)]
    chat: Vec<ScriptedChat>,
    #[serde(default)]
    embedding_dimension: Option<usize>,
}

pub struct MockTransport {
    script: Mutex<Vec<ScriptedChat>>,
    embedding_dimension: usize,
    chat_calls: AtomicUsize,
    embedding_calls: AtomicUsize,
}

const DEFAULT_EMBEDDING_DIMENSION: usize = 16;

impl MockTransport {
    /// No script: every chat call synthesizes enrichment from the prompt.
    pub fn synthesizing() -> Self {
        MockTransport {
            script: Mutex::new(Vec::new()),
            embedding_dimension: DEFAULT_EMBEDDING_DIMENSION,
            chat_calls: AtomicUsize::new(0),
            embedding_calls: AtomicUsize::new(0),
        }
    }

    /// Replay the given responses first, then synthesize.
    pub fn with_responses(responses: Vec<ScriptedChat>) -> Self {
        MockTransport {
            script: Mutex::new(responses),
            embedding_dimension: DEFAULT_EMBEDDING_DIMENSION,
            chat_calls: AtomicUsize::new(0),
            embedding_calls: AtomicUsize::new(0),
        }
    }

    /// Load a scripted-responses JSON file:
    /// `{"chat": [{"content": "..."}, {"status": 500}], "embedding_dimension": 16}`.
    pub fn from_script_file(path: &Path) -> Result<Self, String> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let script: Script = serde_json::from_str(&raw)
            .map_err(|e| format!("invalid mock script {}: {e}", path.display()))?;
        Ok(MockTransport {
            script: Mutex::new(script.chat),
            embedding_dimension: script.embedding_dimension.unwrap_or(DEFAULT_EMBEDDING_DIMENSION),
            chat_calls: AtomicUsize::new(0),
            embedding_calls: AtomicUsize::new(0),
        })
    }

    pub fn chat_calls(&self) -> usize {
        self.chat_calls.load(Ordering::SeqCst)
    }

    pub fn embedding_calls(&self) -> usize {
        self.embedding_calls.load(Ordering::SeqCst)
    }
}

impl Transport for MockTransport {
    fn send_chat(&self, request: &ChatRequest) -> Result<String, TransportError> {
        self.chat_calls.fetch_add(1, Ordering::SeqCst);
        let scripted = {
            let mut script = self.script.lock().unwrap();
            if script.is_empty() {
                None
            } else {
                Some(script.remove(0))
            }
        };
        match scripted {
            Some(ScriptedChat::Content { content }) => Ok(content),
            Some(ScriptedChat::Status { status }) => Err(TransportError::HttpStatus {
                status,
                body: "scripted failure".into(),
            }),
            Some(ScriptedChat::Transport { transport }) => {
                Err(TransportError::Transport(transport))
            }
            None => Ok(synthesize_enrichment(
                request.last_user_content().unwrap_or(""),
            )),
        }
    }

    fn send_embeddings(
        &self,
        _model: &str,
        inputs: &[String],
    ) -> Result<Vec<Vec<f64>>, TransportError> {
        self.embedding_calls.fetch_add(1, Ordering::SeqCst);
        Ok(inputs
            .iter()
            .map(|text| hash_embedding(text, self.embedding_dimension))
            .collect())
    }

    fn name(&self) -> &'static str {
        "mock"
    }
}

/// Deterministic pseudo-embedding: SHA-256 of the text, expanded by chained
/// hashing, bytes mapped into [-1, 1]. Not semantically meaningful, but
/// stable across runs and platforms.
pub fn hash_embedding(text: &str, dimension: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dimension);
    let mut digest = Sha256::digest(text.as_bytes());
    'fill: loop {
        for byte in digest.iter() {
            out.push((*byte as f64 - 127.5) / 128.0);
            if out.len() == dimension {
                break 'fill;
            }
        }
        digest = Sha256::digest(digest);
    }
    out
}

fn prompt_field<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    prompt
        .lines()
        .find_map(|line| line.strip_prefix(label))
        .map(str::trim)
}

fn prompt_chunk_text(prompt: &str) -> &str {
    let after = prompt.split("Chunk Text:\n").nth(1).unwrap_or("");
    after.split("\nRolling Keys").next().unwrap_or(after).trim()
}

fn prompt_rolling_keys(prompt: &str) -> Vec<String> {
    let Some(section) = prompt.split("Rolling Keys").nth(1) else {
        return Vec::new();
    };
    let section = section.split("Extract the following").next().unwrap_or("");
    section
        .lines()
        .filter_map(|line| line.strip_prefix("- "))
        .filter_map(|line| line.split(" (chunks ").next())
        .map(str::to_string)
        .collect()
}

fn words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Build a plausible, fully populated enrichment object from the prompt.
/// The key derives from the innermost section heading, so chunks of one
/// section share a key and exercise Stage 3 merging.
pub fn synthesize_enrichment(prompt: &str) -> String {
    let section = prompt_field(prompt, "Section Path:").unwrap_or("");
    let chunk_text = prompt_chunk_text(prompt);
    let rolling = prompt_rolling_keys(prompt);

    let innermost = section.rsplit(" > ").next().unwrap_or("").trim();
    let mut key_words: Vec<String> = innermost
        .split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .collect::<String>()
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .take(4)
        .collect();
    if key_words.is_empty() {
        key_words = vec!["general".into(), "content".into()];
    } else if key_words.len() == 1 {
        key_words.push("section".into());
    }
    let key = key_words.join(" ");

    let text_words = words(chunk_text);
    let title = if text_words.is_empty() {
        "Untitled passage".to_string()
    } else {
        text_words.iter().take(6).cloned().collect::<Vec<_>>().join(" ")
    };
    let summary = if text_words.is_empty() {
        "This chunk has no textual content.".to_string()
    } else {
        format!(
            "Covers {} in {} words of source text.",
            if innermost.is_empty() { "general material" } else { innermost },
            text_words.len()
        )
    };

    let mut keywords: Vec<String> = Vec::new();
    for word in &text_words {
        let cleaned: String = word
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        if cleaned.chars().count() >= 4 && !keywords.contains(&cleaned) {
            keywords.push(cleaned);
        }
        if keywords.len() == 5 {
            break;
        }
    }
    if keywords.is_empty() {
        keywords.push("content".into());
    }

    let entity_name = if innermost.is_empty() {
        "document".to_string()
    } else {
        innermost.to_string()
    };

    let related: Vec<String> = rolling.into_iter().filter(|k| *k != key).take(2).collect();

    json!({
        "title": title,
        "summary": summary,
        "keywords": keywords,
        "entities": [{"name": entity_name, "type": "CONCEPT"}],
        "questions": [
            format!("What does this part of the document say about {}?",
                    if innermost.is_empty() { "its topic" } else { innermost }),
            "Which details does this chunk provide?",
        ],
        "key": key,
        "related_keys": related,
    })
    .to_string()
}
