//! Stage 2: one LLM call per chunk, in document order, carrying positional
//! context and the rolling key dictionary; graceful degradation on failure.

use serde_json::Value;

use crate::config::PipelineConfig;
use crate::llm::{extract_json, ChatRequest, LlmClient};
use crate::model::{
    normalize_key, Chunk, EnrichmentResult, Entity, EntityType, RollingKeyDict,
};

pub const SYSTEM_PROMPT: &str = "You are a document analysis expert. Analyze this text chunk \
from a Markdown document and extract structured metadata for a RAG system.";

/// Render the user prompt for one chunk.
///
/// `index` is the 1-based position within the document's pre-restructuring
/// sequence. An empty `prev_summary` renders as "(none)"; an empty or
/// disabled rolling dictionary renders as "(none yet)".
pub fn format_prompt(
    chunk: &Chunk,
    index: usize,
    total: usize,
    prev_summary: &str,
    keys: &RollingKeyDict,
    rolling_enabled: bool,
) -> String {
    let prev = if prev_summary.is_empty() { "(none)" } else { prev_summary };

    let rolling_keys = if !rolling_enabled || keys.is_empty() {
        "(none yet)".to_string()
    } else {
        keys.iter()
            .map(|(name, e)| {
                format!(
                    "- {name} (chunks {}\u{2013}{}, seen {}\u{d7})",
                    e.first_chunk, e.last_chunk, e.count
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    };

    format!(
        r#"Section Path: {section}
Chunk Position: {index} of {total} chunks
Previous Chunk Summary: {prev}

Chunk Text:
{text}
Rolling Keys (specific subtopics seen in previous chunks):
{rolling_keys}

Extract the following in a single JSON response:
{{
  "title": "short descriptive title (3-8 words)",
  "summary": "1-2 sentence summary (30-60 words). Focus on what makes this chunk UNIQUE.",
  "keywords": ["5-8 salient domain-specific terms"],
  "entities": [{{"name": "...", "type": "PERSON|ORG|LOC|TECH|CONCEPT|EVENT|METRIC"}}],
  "questions": ["2-3 specific questions this chunk answers"],
  "key": "specific subtopic, 2-5 words, lowercase",
  "related_keys": ["0-3 keys from rolling keys referenced here"]
}}
Rules:
- key must DISTINGUISH this chunk (never a single word or broad document topic)
- related_keys must be a SUBSET of the rolling keys provided
- Return ONLY valid JSON, no extra text"#,
        section = chunk.section_title,
        index = index,
        total = total,
        prev = prev,
        text = chunk.text,
        rolling_keys = rolling_keys,
    )
}

fn string_list(value: &Value, field: &str) -> Vec<String> {
    value
        .get(field)
        .and_then(Value::as_array)
        .map(|items| {
            items
                .iter()
                .filter_map(Value::as_str)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default()
}

/// Map a parsed response object onto the seven enrichment fields.
///
/// Total: missing or ill-typed fields default to empty, the key is
/// normalized (single-word keys rejected), `related_keys` is filtered to
/// the names that were offered in the prompt, and unknown entity types
/// coerce to CONCEPT.
pub fn parse_enrichment(raw: &Value, allowed_keys: &[String]) -> EnrichmentResult {
    let title = raw
        .get("title")
        .and_then(Value::as_str)
        .unwrap_or("")
        .trim()
        .to_string();
    let summary = raw
        .get("summary")
        .and_then(Value::as_str)
        .unwrap_or("")
        .trim()
        .to_string();
    let keywords = string_list(raw, "keywords");
    let questions = string_list(raw, "questions");

    let mut entities = Vec::new();
    if let Some(items) = raw.get("entities").and_then(Value::as_array) {
        for item in items {
            let name = item
                .get("name")
                .and_then(Value::as_str)
                .unwrap_or("")
                .trim()
                .to_string();
            if name.is_empty() {
                continue;
            }
            let raw_type = item.get("type").and_then(Value::as_str).unwrap_or("");
            let entity_type = EntityType::parse(raw_type).unwrap_or_else(|| {
                log::warn!("entity type {raw_type:?} outside the closed set; coercing to CONCEPT");
                EntityType::Concept
            });
            entities.push(Entity { name, entity_type });
        }
    }

    let key = normalize_key(raw.get("key").and_then(Value::as_str).unwrap_or(""));
    if key.split_whitespace().count() > 5 {
        log::warn!("key {key:?} exceeds 5 words; accepting anyway");
    }

    let mut related_keys = Vec::new();
    for candidate in string_list(raw, "related_keys") {
        let normalized = candidate.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ");
        if allowed_keys.contains(&normalized) && !related_keys.contains(&normalized) {
            related_keys.push(normalized);
        }
    }

    EnrichmentResult {
        title,
        summary,
        keywords,
        entities,
        questions,
        key,
        related_keys,
    }
}

/// Counters reported by one enrichment run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnrichmentStats {
    pub llm_calls: u64,
    pub degraded: u64,
}

/// Enrich every chunk of one document, strictly in order, one LLM call per
/// chunk. Failed or unparseable calls leave the chunk with parser fields
/// only; the rolling dictionary starts empty for each document.
pub fn enrich_document(
    chunks: &mut [Chunk],
    client: &LlmClient,
    config: &PipelineConfig,
) -> EnrichmentStats {
    let mut stats = EnrichmentStats::default();
    let mut dict = RollingKeyDict::new(config.rolling_key_capacity);
    let mut prev_summary = String::new();
    let total = chunks.len();

    for (i, chunk) in chunks.iter_mut().enumerate() {
        let index = i + 1;
        let allowed = dict.key_names();
        let prompt = format_prompt(
            chunk,
            index,
            total,
            &prev_summary,
            &dict,
            config.rolling_keys_enabled,
        );
        let request = ChatRequest::new(config.model.clone(), SYSTEM_PROMPT, prompt);
        let outcome = client.complete_chat(&request);
        stats.llm_calls += 1;

        let parsed = outcome
            .content
            .as_deref()
            .and_then(|content| match extract_json(content) {
                Ok(value) => Some(value),
                Err(err) => {
                    log::warn!("chunk {index}/{total}: unparseable enrichment response: {err}");
                    None
                }
            });

        match parsed {
            Some(value) => {
                let result = parse_enrichment(&value, &allowed);
                chunk.apply_enrichment(result);
                if !chunk.key.is_empty() && config.rolling_keys_enabled {
                    dict.record_use(&chunk.key, index);
                }
                prev_summary = chunk.summary.clone();
            }
            None => {
                stats.degraded += 1;
                prev_summary.clear();
            }
        }
    }

    stats
}
