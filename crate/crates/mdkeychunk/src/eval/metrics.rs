//! Retrieval quality metrics: Recall@k and mean reciprocal rank.

use std::collections::{HashMap, HashSet};

use super::RetrievalResult;

/// Fraction of queries with at least one relevant chunk among the first k
/// results. Queries without any relevant set entry count as misses.
pub fn recall_at_k(
    results: &[RetrievalResult],
    relevant: &HashMap<String, HashSet<String>>,
    k: usize,
) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let hits = results
        .iter()
        .filter(|r| {
            relevant.get(&r.query_id).is_some_and(|rel| {
                r.ranked.iter().take(k).any(|(id, _)| rel.contains(id))
            })
        })
        .count();
    hits as f64 / results.len() as f64
}

/// Mean over queries of 1/rank of the first relevant chunk; queries with
/// no relevant chunk retrieved contribute 0.
pub fn mrr(results: &[RetrievalResult], relevant: &HashMap<String, HashSet<String>>) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let total: f64 = results
        .iter()
        .map(|r| {
            let Some(rel) = relevant.get(&r.query_id) else {
                return 0.0;
            };
            r.ranked
                .iter()
                .position(|(id, _)| rel.contains(id))
                .map(|pos| 1.0 / (pos as f64 + 1.0))
                .unwrap_or(0.0)
        })
        .sum();
    total / results.len() as f64
}
