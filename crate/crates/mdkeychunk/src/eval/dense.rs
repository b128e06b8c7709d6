//! Exhaustive inner-product search over unit-norm embeddings.

use crate::llm::LlmClient;
use crate::model::Chunk;

use super::{EvalError, RetrievalResult};

/// What text is embedded for each chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexMode {
    /// The chunk text alone.
    Raw,
    /// Title, summary, questions, and text, newline-joined.
    Augmented,
}

impl IndexMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Some(IndexMode::Raw),
            "augmented" => Some(IndexMode::Augmented),
            _ => None,
        }
    }
}

/// The text a chunk contributes to the index under the given mode.
pub fn embedding_input(chunk: &Chunk, mode: IndexMode) -> String {
    match mode {
        IndexMode::Raw => chunk.text.clone(),
        IndexMode::Augmented => {
            let mut parts: Vec<&str> = Vec::new();
            if !chunk.title.is_empty() {
                parts.push(&chunk.title);
            }
            if !chunk.summary.is_empty() {
                parts.push(&chunk.summary);
            }
            for q in &chunk.questions {
                parts.push(q);
            }
            parts.push(&chunk.text);
            parts.join("\n")
        }
    }
}

const EMBED_BATCH: usize = 64;

pub struct DenseIndex {
    chunk_ids: Vec<String>,
    positions: Vec<usize>,
    vectors: Vec<Vec<f64>>,
    model: String,
}

impl DenseIndex {
    /// Embed every chunk under `mode`; vectors arrive unit-norm from the
    /// client, so inner product below is cosine similarity.
    pub fn build(
        chunks: &[Chunk],
        mode: IndexMode,
        client: &LlmClient,
        model: &str,
    ) -> Result<Self, EvalError> {
        if chunks.is_empty() {
            return Err(EvalError::EmptyCorpus);
        }
        let inputs: Vec<String> = chunks.iter().map(|c| embedding_input(c, mode)).collect();
        let mut vectors = Vec::with_capacity(inputs.len());
        for batch in inputs.chunks(EMBED_BATCH) {
            vectors.extend(client.embed_texts(batch, model)?);
        }
        Ok(DenseIndex {
            chunk_ids: chunks.iter().map(|c| c.chunk_id.clone()).collect(),
            positions: chunks.iter().map(|c| c.position_index).collect(),
            vectors,
            model: model.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Rank the whole corpus by inner product with the embedded query,
    /// ties broken by ascending position index; return the top k.
    pub fn retrieve(
        &self,
        query_id: &str,
        query: &str,
        k: usize,
        client: &LlmClient,
    ) -> Result<RetrievalResult, EvalError> {
        let query_vec = client
            .embed_texts(&[query.to_string()], &self.model)?
            .pop()
            .expect("one vector per input");
        let mut scored: Vec<(usize, f64)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (i, dot(&query_vec, v)))
            .collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.positions[a.0].cmp(&self.positions[b.0]))
        });
        Ok(RetrievalResult {
            query_id: query_id.to_string(),
            ranked: scored
                .into_iter()
                .take(k)
                .map(|(i, s)| (self.chunk_ids[i].clone(), s))
                .collect(),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
