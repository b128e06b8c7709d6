//! End-to-end orchestration: parse, enrich, restructure one document (or a
//! directory of documents), with run statistics and JSON emission.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::enricher::enrich_document;
use crate::llm::LlmClient;
use crate::model::Chunk;
use crate::parser::{chunk_document, parse_blocks};
use crate::restructurer::{restructure, RestructureError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Restructure(#[from] RestructureError),
    #[error("no *.md files found in {0}")]
    EmptyDirectory(String),
}

/// Aggregated statistics for a pipeline run, covering chunk counts, fill
/// rates, key/merge figures, degradation, and per-stage timing.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunStats {
    pub documents: usize,
    pub chunks_before: usize,
    pub chunks_after: usize,
    pub llm_calls: u64,
    pub degraded_calls: u64,
    pub unique_keys: usize,
    pub merged_groups: usize,
    pub chunks_in_merged_groups: usize,
    pub orphans: usize,
    pub augmented_orphans: usize,
    pub key_filled: usize,
    pub title_filled: usize,
    pub summary_filled: usize,
    /// Chunks where the six content fields (title, summary, keywords,
    /// entities, questions, key) are all non-empty. `related_keys` is
    /// legitimately empty when nothing earlier exists to reference.
    pub fully_enriched: usize,
    pub chunks_with_related_keys: usize,
    pub total_related_keys: usize,
    pub total_entities: usize,
    pub total_keywords: usize,
    pub total_questions: usize,
    pub total_summary_words: usize,
    pub total_tokens: usize,
    pub parse_secs: f64,
    pub enrich_secs: f64,
    pub restructure_secs: f64,
}

impl RunStats {
    pub fn merge(&mut self, other: &RunStats) {
        self.documents += other.documents;
        self.chunks_before += other.chunks_before;
        self.chunks_after += other.chunks_after;
        self.llm_calls += other.llm_calls;
        self.degraded_calls += other.degraded_calls;
        self.unique_keys += other.unique_keys;
        self.merged_groups += other.merged_groups;
        self.chunks_in_merged_groups += other.chunks_in_merged_groups;
        self.orphans += other.orphans;
        self.augmented_orphans += other.augmented_orphans;
        self.key_filled += other.key_filled;
        self.title_filled += other.title_filled;
        self.summary_filled += other.summary_filled;
        self.fully_enriched += other.fully_enriched;
        self.chunks_with_related_keys += other.chunks_with_related_keys;
        self.total_related_keys += other.total_related_keys;
        self.total_entities += other.total_entities;
        self.total_keywords += other.total_keywords;
        self.total_questions += other.total_questions;
        self.total_summary_words += other.total_summary_words;
        self.total_tokens += other.total_tokens;
        self.parse_secs += other.parse_secs;
        self.enrich_secs += other.enrich_secs;
        self.restructure_secs += other.restructure_secs;
    }

    fn rate(numerator: usize, denominator: usize) -> f64 {
        if denominator == 0 {
            0.0
        } else {
            numerator as f64 / denominator as f64
        }
    }

    pub fn key_fill_rate(&self) -> f64 {
        Self::rate(self.key_filled, self.chunks_after)
    }

    pub fn title_fill_rate(&self) -> f64 {
        Self::rate(self.title_filled, self.chunks_after)
    }

    pub fn summary_fill_rate(&self) -> f64 {
        Self::rate(self.summary_filled, self.chunks_after)
    }

    pub fn fully_enriched_rate(&self) -> f64 {
        Self::rate(self.fully_enriched, self.chunks_after)
    }

    /// Human-readable multi-line summary for logs.
    pub fn summary_lines(&self) -> String {
        format!(
            "documents: {}\nchunks before/after: {} -> {}\nllm calls: {} ({} degraded)\n\
             unique keys: {}, merged groups: {}, chunks in merged groups: {}\n\
             fill rates: key {:.1}%, title {:.1}%, summary {:.1}%, fully enriched {:.1}%\n\
             stage seconds: parse {:.3}, enrich {:.3}, restructure {:.3}",
            self.documents,
            self.chunks_before,
            self.chunks_after,
            self.llm_calls,
            self.degraded_calls,
            self.unique_keys,
            self.merged_groups,
            self.chunks_in_merged_groups,
            100.0 * self.key_fill_rate(),
            100.0 * self.title_fill_rate(),
            100.0 * self.summary_fill_rate(),
            100.0 * self.fully_enriched_rate(),
            self.parse_secs,
            self.enrich_secs,
            self.restructure_secs,
        )
    }
}

fn collect_output_stats(chunks: &[Chunk], stats: &mut RunStats) {
    for c in chunks {
        if !c.key.is_empty() {
            stats.key_filled += 1;
        }
        if !c.title.is_empty() {
            stats.title_filled += 1;
        }
        if !c.summary.is_empty() {
            stats.summary_filled += 1;
        }
        if !c.title.is_empty()
            && !c.summary.is_empty()
            && !c.keywords.is_empty()
            && !c.entities.is_empty()
            && !c.questions.is_empty()
            && !c.key.is_empty()
        {
            stats.fully_enriched += 1;
        }
        if !c.related_keys.is_empty() {
            stats.chunks_with_related_keys += 1;
        }
        stats.total_related_keys += c.related_keys.len();
        stats.total_entities += c.entities.len();
        stats.total_keywords += c.keywords.len();
        stats.total_questions += c.questions.len();
        stats.total_summary_words += c.summary.split_whitespace().count();
        stats.total_tokens += c.token_count;
    }
}

/// Run the three stages over one in-memory document.
pub fn run_document(
    text: &str,
    source_document: &str,
    config: &PipelineConfig,
    client: &LlmClient,
) -> Result<(Vec<Chunk>, RunStats), PipelineError> {
    let mut stats = RunStats { documents: 1, ..RunStats::default() };

    let parse_started = Instant::now();
    let blocks = parse_blocks(text);
    let mut chunks = chunk_document(blocks, config);
    for chunk in &mut chunks {
        chunk.source_document = source_document.to_string();
    }
    stats.parse_secs = parse_started.elapsed().as_secs_f64();
    stats.chunks_before = chunks.len();

    let enrich_started = Instant::now();
    let enrich_stats = enrich_document(&mut chunks, client, config);
    stats.enrich_secs = enrich_started.elapsed().as_secs_f64();
    stats.llm_calls = enrich_stats.llm_calls;
    stats.degraded_calls = enrich_stats.degraded;

    let restructure_started = Instant::now();
    let (chunks, restructure_stats) = restructure(chunks, config)?;
    stats.restructure_secs = restructure_started.elapsed().as_secs_f64();
    stats.chunks_after = chunks.len();
    stats.unique_keys = restructure_stats.key_groups;
    stats.merged_groups = restructure_stats.merged_groups;
    stats.chunks_in_merged_groups = restructure_stats.chunks_in_merged_groups;
    stats.orphans = restructure_stats.orphans;
    stats.augmented_orphans = restructure_stats.augmented_orphans;

    collect_output_stats(&chunks, &mut stats);
    Ok((chunks, stats))
}

/// Run the pipeline over one Markdown file.
pub fn run_pipeline(
    document_path: &Path,
    config: &PipelineConfig,
    client: &LlmClient,
) -> Result<(Vec<Chunk>, RunStats), PipelineError> {
    let text = std::fs::read_to_string(document_path).map_err(|source| PipelineError::Io {
        path: document_path.display().to_string(),
        source,
    })?;
    let name = document_path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| document_path.display().to_string());
    run_document(&text, &name, config, client)
}

/// Every *.md file directly inside `dir`, sorted by file name.
pub fn markdown_files(dir: &Path) -> Result<Vec<std::path::PathBuf>, PipelineError> {
    let entries = std::fs::read_dir(dir).map_err(|source| PipelineError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut files: Vec<std::path::PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|ext| ext.eq_ignore_ascii_case("md"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(PipelineError::EmptyDirectory(dir.display().to_string()));
    }
    Ok(files)
}

/// Process a file or a directory of *.md files. Each document gets its own
/// rolling-key dictionary; chunks are concatenated in file-name order.
pub fn run_path(
    input: &Path,
    config: &PipelineConfig,
    client: &LlmClient,
) -> Result<(Vec<Chunk>, RunStats), PipelineError> {
    if input.is_dir() {
        let mut all_chunks = Vec::new();
        let mut total = RunStats::default();
        for file in markdown_files(input)? {
            let (chunks, stats) = run_pipeline(&file, config, client)?;
            log::info!(
                "{}: {} chunks ({} before merge)",
                file.display(),
                stats.chunks_after,
                stats.chunks_before
            );
            all_chunks.extend(chunks);
            total.merge(&stats);
        }
        Ok((all_chunks, total))
    } else {
        run_pipeline(input, config, client)
    }
}

/// Serialize finalized chunks as a pretty-printed JSON array with a stable
/// field order.
pub fn serialize_chunks(chunks: &[Chunk]) -> String {
    let mut out = serde_json::to_string_pretty(chunks).expect("chunks serialize");
    out.push('\n');
    out
}
