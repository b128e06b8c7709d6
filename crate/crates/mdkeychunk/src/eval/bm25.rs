//! Okapi BM25 scoring over chunk texts with an inverted document-frequency
//! table. k1 = 1.5, b = 0.75.

use std::collections::HashMap;

use crate::model::Chunk;

use super::{EvalError, RetrievalResult};

pub const K1: f64 = 1.5;
pub const B: f64 = 0.75;

/// Lowercase and split on non-alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

struct DocEntry {
    chunk_id: String,
    position_index: usize,
    term_freq: HashMap<String, usize>,
    length: usize,
}

pub struct Bm25Index {
    docs: Vec<DocEntry>,
    doc_freq: HashMap<String, usize>,
    avgdl: f64,
}

impl Bm25Index {
    pub fn build(chunks: &[Chunk]) -> Result<Self, EvalError> {
        if chunks.is_empty() {
            return Err(EvalError::EmptyCorpus);
        }
        let mut docs = Vec::with_capacity(chunks.len());
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        let mut total_len = 0usize;
        for chunk in chunks {
            let tokens = tokenize(&chunk.text);
            let mut term_freq: HashMap<String, usize> = HashMap::new();
            for token in &tokens {
                *term_freq.entry(token.clone()).or_insert(0) += 1;
            }
            for term in term_freq.keys() {
                *doc_freq.entry(term.clone()).or_insert(0) += 1;
            }
            total_len += tokens.len();
            docs.push(DocEntry {
                chunk_id: chunk.chunk_id.clone(),
                position_index: chunk.position_index,
                term_freq,
                length: tokens.len(),
            });
        }
        let avgdl = total_len as f64 / docs.len() as f64;
        Ok(Bm25Index { docs, doc_freq, avgdl })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    pub fn score(&self, query_terms: &[String], doc_index: usize) -> f64 {
        let doc = &self.docs[doc_index];
        let mut score = 0.0;
        for term in query_terms {
            let tf = doc.term_freq.get(term).copied().unwrap_or(0) as f64;
            if tf == 0.0 {
                continue;
            }
            let norm = if self.avgdl > 0.0 {
                K1 * (1.0 - B + B * doc.length as f64 / self.avgdl)
            } else {
                K1
            };
            score += self.idf(term) * tf * (K1 + 1.0) / (tf + norm);
        }
        score
    }
}

/// Score every chunk against the query and return the top k, ties broken
/// by ascending position index.
pub fn bm25_retrieve(
    query_id: &str,
    query: &str,
    index: &Bm25Index,
    k: usize,
) -> RetrievalResult {
    let query_terms = tokenize(query);
    let mut scored: Vec<(usize, f64)> = (0..index.docs.len())
        .map(|i| (i, index.score(&query_terms, i)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| index.docs[a.0].position_index.cmp(&index.docs[b.0].position_index))
    });
    RetrievalResult {
        query_id: query_id.to_string(),
        ranked: scored
            .into_iter()
            .take(k)
            .map(|(i, s)| (index.docs[i].chunk_id.clone(), s))
            .collect(),
    }
}
