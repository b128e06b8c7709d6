//! Stage 3: group enriched chunks by semantic key, first-fit bin-pack each
//! group under the merge threshold, merge bins, augment small orphans with
//! section context, then sort and finalize IDs, links, and token counts.

use std::collections::HashSet;

use indexmap::IndexMap;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::model::Chunk;

#[derive(Debug, Error)]
pub enum RestructureError {
    #[error("duplicate chunk id {0} in document output")]
    DuplicateChunkId(String),
}

/// Group chunk indices by exact normalized key, group order by first
/// occurrence. Chunks with an empty key are orphans.
pub fn group_by_key(chunks: &[Chunk]) -> (IndexMap<String, Vec<usize>>, Vec<usize>) {
    let mut groups: IndexMap<String, Vec<usize>> = IndexMap::new();
    let mut orphans = Vec::new();
    for (i, chunk) in chunks.iter().enumerate() {
        if chunk.key.is_empty() {
            orphans.push(i);
        } else {
            groups.entry(chunk.key.clone()).or_default().push(i);
        }
    }
    (groups, orphans)
}

/// First-fit packing over a same-key group, in document order. An item
/// joins the current bin iff `size + item + 2 <= max_merged` (the +2 is
/// the two-character blank-line separator), else it opens a new bin.
pub fn bin_pack(indices: &[usize], sizes: &[usize], max_merged: usize) -> Vec<Vec<usize>> {
    debug_assert_eq!(indices.len(), sizes.len());
    let mut bins: Vec<Vec<usize>> = Vec::new();
    let mut current_size = 0usize;
    for (idx, &size) in indices.iter().zip(sizes) {
        if bins.is_empty() {
            bins.push(vec![*idx]);
            current_size = size;
        } else if current_size + size + 2 <= max_merged {
            bins.last_mut().unwrap().push(*idx);
            current_size += size + 2;
        } else {
            bins.push(vec![*idx]);
            current_size = size;
        }
    }
    bins
}

fn dedup_case_insensitive(lists: impl Iterator<Item = Vec<String>>) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for list in lists {
        for item in list {
            if seen.insert(item.to_lowercase()) {
                out.push(item);
            }
        }
    }
    out
}

/// Merge one bin of same-key chunks into a single chunk: texts joined by a
/// blank line, metadata deduplicated, title/summary/section from the first
/// member, line range spanning all members.
pub fn merge_bin(members: &[&Chunk]) -> Chunk {
    debug_assert!(!members.is_empty());
    let first = members[0];
    if members.len() == 1 {
        return first.clone();
    }

    let mut merged = first.clone();
    merged.text = members
        .iter()
        .map(|c| c.text.as_str())
        .collect::<Vec<_>>()
        .join("\n\n");
    merged.keywords = dedup_case_insensitive(members.iter().map(|c| c.keywords.clone()));
    merged.questions = dedup_case_insensitive(members.iter().map(|c| c.questions.clone()));
    merged.related_keys = dedup_case_insensitive(members.iter().map(|c| c.related_keys.clone()));

    let mut seen_entities = HashSet::new();
    merged.entities = members
        .iter()
        .flat_map(|c| c.entities.iter().cloned())
        .filter(|e| seen_entities.insert((e.name.to_lowercase(), e.entity_type)))
        .collect();

    merged.content_types = members
        .iter()
        .flat_map(|c| c.content_types.iter().copied())
        .collect();
    merged.start_line = members.iter().map(|c| c.start_line).min().unwrap();
    merged.end_line = members.iter().map(|c| c.end_line).max().unwrap();

    // Reset finalization fields; a merged chunk is a new unit.
    merged.chunk_id = String::new();
    merged.previous_chunk_id = None;
    merged.next_chunk_id = None;
    merged.token_count = 0;
    merged
}

/// Prepend section context to a keyless chunk smaller than `min_orphan`:
/// `[Context: {section}. {prev} {next}]` with empty parts omitted.
pub fn augment_orphan(chunk: &mut Chunk, prev_summary: &str, next_summary: &str, min_orphan: usize) {
    if chunk.char_len() >= min_orphan {
        return;
    }
    let mut parts: Vec<String> = Vec::new();
    if !chunk.section_title.is_empty() {
        parts.push(format!("{}.", chunk.section_title));
    }
    if !prev_summary.is_empty() {
        parts.push(prev_summary.to_string());
    }
    if !next_summary.is_empty() {
        parts.push(next_summary.to_string());
    }
    if parts.is_empty() {
        return;
    }
    chunk.text = format!("[Context: {}]\n\n{}", parts.join(" "), chunk.text);
}

/// SHA-256 over section title, key, decimal position, and the first 100
/// characters of text, '|'-joined; hex digest truncated to 16 characters.
pub fn compute_chunk_id(section_title: &str, key: &str, position_index: usize, text: &str) -> String {
    let prefix: String = text.chars().take(100).collect();
    let payload = format!("{section_title}|{key}|{position_index}|{prefix}");
    let digest = Sha256::digest(payload.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Character-count fallback: `len(text) / 4`, rounded down.
pub fn fallback_token_estimate(text: &str) -> usize {
    text.chars().count() / 4
}

#[cfg(feature = "tiktoken")]
fn cl100k() -> Option<&'static tiktoken_rs::CoreBPE> {
    use std::sync::OnceLock;
    static BPE: OnceLock<Option<tiktoken_rs::CoreBPE>> = OnceLock::new();
    BPE.get_or_init(|| tiktoken_rs::cl100k_base().ok()).as_ref()
}

/// Token count via the cl100k_base BPE when available, else the
/// characters/4 fallback.
pub fn estimate_tokens(text: &str) -> usize {
    #[cfg(feature = "tiktoken")]
    if let Some(bpe) = cl100k() {
        return bpe.encode_ordinary(text).len();
    }
    fallback_token_estimate(text)
}

/// Assign position indices, chunk ids, navigation links, and token counts
/// to a chunk list already in its final order. Idempotent.
pub fn finalize_chunks(chunks: &mut [Chunk]) -> Result<(), RestructureError> {
    for (i, chunk) in chunks.iter_mut().enumerate() {
        chunk.position_index = i;
        chunk.token_count = estimate_tokens(&chunk.text);
        chunk.chunk_id = compute_chunk_id(&chunk.section_title, &chunk.key, i, &chunk.text);
    }

    let mut seen = HashSet::new();
    for chunk in chunks.iter() {
        if !seen.insert(chunk.chunk_id.clone()) {
            return Err(RestructureError::DuplicateChunkId(chunk.chunk_id.clone()));
        }
    }

    let ids: Vec<String> = chunks.iter().map(|c| c.chunk_id.clone()).collect();
    for (i, chunk) in chunks.iter_mut().enumerate() {
        chunk.previous_chunk_id = if i > 0 { Some(ids[i - 1].clone()) } else { None };
        chunk.next_chunk_id = ids.get(i + 1).cloned();
    }
    Ok(())
}

/// Counters reported by one restructuring run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RestructureStats {
    /// Distinct non-empty keys.
    pub key_groups: usize,
    /// Groups holding more than one chunk.
    pub merged_groups: usize,
    /// Chunks living in those multi-chunk groups.
    pub chunks_in_merged_groups: usize,
    pub orphans: usize,
    pub augmented_orphans: usize,
}

/// Run the full Stage 3 transformation. With `merge_by_keys` disabled every
/// chunk stays a singleton; orphan augmentation and finalization still run.
pub fn restructure(
    chunks: Vec<Chunk>,
    config: &PipelineConfig,
) -> Result<(Vec<Chunk>, RestructureStats), RestructureError> {
    let mut stats = RestructureStats::default();

    // Neighbor summaries come from the original document-order sequence.
    let summaries: Vec<String> = chunks.iter().map(|c| c.summary.clone()).collect();
    let neighbor_summaries = |i: usize| -> (String, String) {
        let prev = if i > 0 { summaries[i - 1].clone() } else { String::new() };
        let next = summaries.get(i + 1).cloned().unwrap_or_default();
        (prev, next)
    };

    let mut output: Vec<Chunk> = Vec::with_capacity(chunks.len());

    if config.merge_by_keys {
        let (groups, orphans) = group_by_key(&chunks);
        stats.key_groups = groups.len();
        for (_, indices) in &groups {
            if indices.len() > 1 {
                stats.merged_groups += 1;
                stats.chunks_in_merged_groups += indices.len();
            }
            let sizes: Vec<usize> = indices.iter().map(|&i| chunks[i].char_len()).collect();
            for bin in bin_pack(indices, &sizes, config.max_merged_size) {
                let members: Vec<&Chunk> = bin.iter().map(|&i| &chunks[i]).collect();
                output.push(merge_bin(&members));
            }
        }
        stats.orphans = orphans.len();
        for i in orphans {
            let mut orphan = chunks[i].clone();
            let (prev, next) = neighbor_summaries(i);
            let before = orphan.text.len();
            augment_orphan(&mut orphan, &prev, &next, config.min_orphan_size);
            if orphan.text.len() != before {
                stats.augmented_orphans += 1;
            }
            output.push(orphan);
        }
    } else {
        for (i, chunk) in chunks.iter().enumerate() {
            let mut chunk = chunk.clone();
            if chunk.key.is_empty() {
                stats.orphans += 1;
                let (prev, next) = neighbor_summaries(i);
                let before = chunk.text.len();
                augment_orphan(&mut chunk, &prev, &next, config.min_orphan_size);
                if chunk.text.len() != before {
                    stats.augmented_orphans += 1;
                }
            }
            output.push(chunk);
        }
    }

    output.sort_by_key(|c| c.start_line);
    finalize_chunks(&mut output)?;
    Ok((output, stats))
}
