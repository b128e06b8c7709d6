//! Retrieval evaluation harness: four indexing configurations over a
//! Markdown corpus, scored with Recall@k and MRR.

pub mod bm25;
pub mod dense;
pub mod metrics;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::llm::{LlmClient, LlmError};
use crate::model::Chunk;
use crate::parser::{chunk_document, parse_blocks};
use crate::pipeline::{markdown_files, run_document, PipelineError};
use crate::restructurer::finalize_chunks;

pub use bm25::{bm25_retrieve, Bm25Index};
pub use dense::{DenseIndex, IndexMode};
pub use metrics::{mrr, recall_at_k};

/// One evaluation query with its relevance operationalization: a chunk is
/// relevant iff it comes from `gold_document` and contains `gold_substring`
/// case-insensitively.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct Query {
    pub id: String,
    pub query: String,
    pub gold_document: String,
    pub gold_substring: String,
}

/// Ranked retrieval output for one query, scores non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub query_id: String,
    pub ranked: Vec<(String, f64)>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("corpus contains no chunks")]
    EmptyCorpus,
    #[error("queries file {path}: {reason}")]
    BadQueries { path: String, reason: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("unknown configuration {0:?} (expected A, B, C, or D)")]
    UnknownConfig(String),
}

/// The four experimental configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EvalConfig {
    /// Fixed-size 512-character windows, dense retrieval over raw text.
    A,
    /// Structural chunks, dense retrieval over raw text.
    B,
    /// Full pipeline, dense retrieval over metadata-augmented text.
    C,
    /// Structural chunks, BM25 sparse retrieval.
    D,
}

impl EvalConfig {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Some(EvalConfig::A),
            "B" => Some(EvalConfig::B),
            "C" => Some(EvalConfig::C),
            "D" => Some(EvalConfig::D),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EvalConfig::A => "fixed-size 512 (dense)",
            EvalConfig::B => "structure-only (dense)",
            EvalConfig::C => "full pipeline (dense)",
            EvalConfig::D => "structure-only (BM25)",
        }
    }
}

pub const DEFAULT_FIXED_CHUNK_SIZE: usize = 512;

/// Split a document into consecutive non-overlapping windows of exactly
/// `size` characters (final remainder shorter), carrying no metadata.
pub fn fixed_size_chunk(document: &str, size: usize) -> Vec<Chunk> {
    assert!(size > 0, "window size must be positive");
    let mut chunks = Vec::new();
    let mut window = String::with_capacity(size * 4);
    let mut window_chars = 0usize;
    let mut line = 1usize;
    let mut start_line = 1usize;

    let mut flush = |window: &mut String, start_line: usize, line: usize| {
        let end_line = if window.ends_with('\n') { line - 1 } else { line };
        chunks.push(Chunk::from_parser(
            std::mem::take(window),
            String::new(),
            BTreeSet::new(),
            start_line,
            end_line.max(start_line),
        ));
    };

    for ch in document.chars() {
        if window_chars == 0 {
            start_line = line;
        }
        window.push(ch);
        window_chars += 1;
        if ch == '\n' {
            line += 1;
        }
        if window_chars == size {
            flush(&mut window, start_line, line);
            window_chars = 0;
        }
    }
    if window_chars > 0 {
        flush(&mut window, start_line, line);
    }
    chunks
}

/// Per-query sets of relevant chunk ids under the substring judgment.
pub fn judge_relevance(
    queries: &[Query],
    chunks: &[Chunk],
) -> HashMap<String, HashSet<String>> {
    let mut out: HashMap<String, HashSet<String>> = HashMap::new();
    for query in queries {
        let needle = query.gold_substring.to_lowercase();
        let ids = chunks
            .iter()
            .filter(|c| {
                c.source_document == query.gold_document
                    && c.text.to_lowercase().contains(&needle)
            })
            .map(|c| c.chunk_id.clone())
            .collect();
        out.insert(query.id.clone(), ids);
    }
    out
}

/// Read one JSON object per line: `{id, query, gold_document, gold_substring}`.
pub fn load_queries(path: &Path) -> Result<Vec<Query>, EvalError> {
    let raw = std::fs::read_to_string(path).map_err(|e| EvalError::BadQueries {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let mut queries = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let query: Query = serde_json::from_str(line).map_err(|e| EvalError::BadQueries {
            path: path.display().to_string(),
            reason: format!("line {}: {e}", lineno + 1),
        })?;
        if query.gold_substring.is_empty() {
            return Err(EvalError::BadQueries {
                path: path.display().to_string(),
                reason: format!("query {} has an empty gold_substring", query.id),
            });
        }
        queries.push(query);
    }
    if queries.is_empty() {
        return Err(EvalError::BadQueries {
            path: path.display().to_string(),
            reason: "no queries found".into(),
        });
    }
    Ok(queries)
}

#[derive(Debug, Clone, Serialize)]
pub struct RecallPoint {
    pub k: usize,
    pub value: f64,
}

/// One row of the results table.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigResult {
    pub config: EvalConfig,
    pub label: String,
    pub chunks: usize,
    pub recall: Vec<RecallPoint>,
    pub mrr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub corpus_documents: usize,
    pub queries: usize,
    pub k_values: Vec<usize>,
    pub rows: Vec<ConfigResult>,
}

fn load_corpus(dir: &Path) -> Result<Vec<(String, String)>, EvalError> {
    let mut docs = Vec::new();
    for path in markdown_files(dir)? {
        let text = std::fs::read_to_string(&path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default();
        docs.push((name, text));
    }
    Ok(docs)
}

/// Stage-1 structural chunks for every document, finalized per document.
fn structural_chunks(
    docs: &[(String, String)],
    config: &PipelineConfig,
) -> Result<Vec<Chunk>, EvalError> {
    let mut all = Vec::new();
    for (name, text) in docs {
        let mut chunks = chunk_document(parse_blocks(text), config);
        for c in &mut chunks {
            c.source_document = name.clone();
        }
        finalize_chunks(&mut chunks).map_err(PipelineError::from)?;
        all.extend(chunks);
    }
    // Corpus-wide positions give deterministic tie-breaks across documents.
    for (i, c) in all.iter_mut().enumerate() {
        c.position_index = i;
    }
    Ok(all)
}

fn fixed_chunks(docs: &[(String, String)]) -> Result<Vec<Chunk>, EvalError> {
    let mut all = Vec::new();
    for (name, text) in docs {
        let mut chunks = fixed_size_chunk(text, DEFAULT_FIXED_CHUNK_SIZE);
        for c in &mut chunks {
            c.source_document = name.clone();
        }
        finalize_chunks(&mut chunks).map_err(PipelineError::from)?;
        all.extend(chunks);
    }
    for (i, c) in all.iter_mut().enumerate() {
        c.position_index = i;
    }
    Ok(all)
}

fn pipeline_chunks(
    docs: &[(String, String)],
    config: &PipelineConfig,
    client: &LlmClient,
) -> Result<Vec<Chunk>, EvalError> {
    let mut all = Vec::new();
    for (name, text) in docs {
        let (chunks, _) = run_document(text, name, config, client)?;
        all.extend(chunks);
    }
    for (i, c) in all.iter_mut().enumerate() {
        c.position_index = i;
    }
    Ok(all)
}

fn evaluate_dense(
    chunks: &[Chunk],
    mode: IndexMode,
    queries: &[Query],
    k_values: &[usize],
    client: &LlmClient,
    embedding_model: &str,
) -> Result<(Vec<RecallPoint>, f64, usize), EvalError> {
    let index = DenseIndex::build(chunks, mode, client, embedding_model)?;
    let max_k = k_values.iter().copied().max().unwrap_or(10);
    let results = queries
        .iter()
        .map(|q| index.retrieve(&q.id, &q.query, max_k, client))
        .collect::<Result<Vec<_>, _>>()?;
    let relevant = judge_relevance(queries, chunks);
    let recall = k_values
        .iter()
        .map(|&k| RecallPoint { k, value: recall_at_k(&results, &relevant, k) })
        .collect();
    Ok((recall, mrr(&results, &relevant), chunks.len()))
}

fn evaluate_bm25(
    chunks: &[Chunk],
    queries: &[Query],
    k_values: &[usize],
) -> Result<(Vec<RecallPoint>, f64, usize), EvalError> {
    let index = Bm25Index::build(chunks)?;
    let max_k = k_values.iter().copied().max().unwrap_or(10);
    let results: Vec<RetrievalResult> = queries
        .iter()
        .map(|q| bm25_retrieve(&q.id, &q.query, &index, max_k))
        .collect();
    let relevant = judge_relevance(queries, chunks);
    let recall = k_values
        .iter()
        .map(|&k| RecallPoint { k, value: recall_at_k(&results, &relevant, k) })
        .collect();
    Ok((recall, mrr(&results, &relevant), chunks.len()))
}

/// Build the requested configurations over the corpus, run every query,
/// and assemble the results table.
pub fn run_eval(
    corpus_dir: &Path,
    queries_path: &Path,
    configs: &[EvalConfig],
    k_values: &[usize],
    config: &PipelineConfig,
    client: &LlmClient,
    config_c_mode: IndexMode,
) -> Result<EvalReport, EvalError> {
    let docs = load_corpus(corpus_dir)?;
    let queries = load_queries(queries_path)?;

    let mut k_values: Vec<usize> = k_values.to_vec();
    k_values.sort_unstable();
    k_values.dedup();

    let mut rows = Vec::new();
    for cfg in configs {
        let (recall, mrr_value, chunk_count) = match cfg {
            EvalConfig::A => {
                let chunks = fixed_chunks(&docs)?;
                evaluate_dense(&chunks, IndexMode::Raw, &queries, &k_values, client,
                               &config.embedding_model)?
            }
            EvalConfig::B => {
                let chunks = structural_chunks(&docs, config)?;
                evaluate_dense(&chunks, IndexMode::Raw, &queries, &k_values, client,
                               &config.embedding_model)?
            }
            EvalConfig::C => {
                let chunks = pipeline_chunks(&docs, config, client)?;
                evaluate_dense(&chunks, config_c_mode, &queries, &k_values, client,
                               &config.embedding_model)?
            }
            EvalConfig::D => {
                let chunks = structural_chunks(&docs, config)?;
                evaluate_bm25(&chunks, &queries, &k_values)?
            }
        };
        log::info!(
            "config {:?} ({}): {} chunks, MRR {:.3}",
            cfg,
            cfg.label(),
            chunk_count,
            mrr_value
        );
        rows.push(ConfigResult {
            config: *cfg,
            label: cfg.label().to_string(),
            chunks: chunk_count,
            recall,
            mrr: mrr_value,
        });
    }

    Ok(EvalReport {
        corpus_documents: docs.len(),
        queries: queries.len(),
        k_values,
        rows,
    })
}
