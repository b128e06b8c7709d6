//! Domain types shared by all pipeline stages. No I/O lives here.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// The six structural block types recognized by the Markdown parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockType {
    Header,
    Code,
    Table,
    List,
    Blockquote,
    Paragraph,
}

impl BlockType {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlockType::Header => "header",
            BlockType::Code => "code",
            BlockType::Table => "table",
            BlockType::List => "list",
            BlockType::Blockquote => "blockquote",
            BlockType::Paragraph => "paragraph",
        }
    }
}

/// One parsed Markdown unit: type, verbatim source lines, and 1-based line range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub block_type: BlockType,
    pub content: String,
    pub start_line: usize,
    pub end_line: usize,
    /// Heading level 1-6, present iff `block_type` is `Header`.
    pub heading_level: Option<u8>,
}

impl Block {
    pub fn new(block_type: BlockType, content: String, start_line: usize, end_line: usize) -> Self {
        debug_assert!(start_line <= end_line);
        Block {
            block_type,
            content,
            start_line,
            end_line,
            heading_level: None,
        }
    }

    pub fn header(content: String, level: u8, line: usize) -> Self {
        debug_assert!((1..=6).contains(&level));
        Block {
            block_type: BlockType::Header,
            content,
            start_line: line,
            end_line: line,
            heading_level: Some(level),
        }
    }

    /// Block size in characters, the unit all thresholds are expressed in.
    pub fn char_len(&self) -> usize {
        self.content.chars().count()
    }
}

/// Closed set of entity types the enrichment prompt asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Person,
    Org,
    Loc,
    Tech,
    Concept,
    Event,
    Metric,
}

impl EntityType {
    /// Case-insensitive parse; `None` for anything outside the closed set.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PERSON" => Some(EntityType::Person),
            "ORG" => Some(EntityType::Org),
            "LOC" => Some(EntityType::Loc),
            "TECH" => Some(EntityType::Tech),
            "CONCEPT" => Some(EntityType::Concept),
            "EVENT" => Some(EntityType::Event),
            "METRIC" => Some(EntityType::Metric),
            _ => None,
        }
    }
}

/// A typed named entity extracted from a chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
}

/// The seven metadata fields returned by one enrichment call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnrichmentResult {
    pub title: String,
    pub summary: String,
    pub keywords: Vec<String>,
    pub entities: Vec<Entity>,
    pub questions: Vec<String>,
    /// Normalized semantic key, or empty when the model produced none usable.
    pub key: String,
    /// Subset of the rolling key names that were offered in the prompt.
    pub related_keys: Vec<String>,
}

/// The pipeline's unit of text plus metadata, from parser fields through
/// enriched and finalized fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    /// 16-hex-char identifier; empty until finalization.
    pub chunk_id: String,
    pub text: String,
    /// Header-stack path in force at the chunk's first block, " > "-joined.
    pub section_title: String,
    pub title: String,
    pub summary: String,
    pub keywords: Vec<String>,
    pub entities: Vec<Entity>,
    pub questions: Vec<String>,
    pub key: String,
    pub related_keys: Vec<String>,
    pub content_types: BTreeSet<BlockType>,
    pub position_index: usize,
    pub previous_chunk_id: Option<String>,
    pub next_chunk_id: Option<String>,
    pub token_count: usize,
    pub source_document: String,
    pub start_line: usize,
    pub end_line: usize,
}

impl Chunk {
    /// A chunk carrying parser-derived fields only; metadata stays empty
    /// until enrichment and finalization.
    pub fn from_parser(
        text: String,
        section_title: String,
        content_types: BTreeSet<BlockType>,
        start_line: usize,
        end_line: usize,
    ) -> Self {
        debug_assert!(start_line <= end_line);
        Chunk {
            chunk_id: String::new(),
            text,
            section_title,
            title: String::new(),
            summary: String::new(),
            keywords: Vec::new(),
            entities: Vec::new(),
            questions: Vec::new(),
            key: String::new(),
            related_keys: Vec::new(),
            content_types,
            position_index: 0,
            previous_chunk_id: None,
            next_chunk_id: None,
            token_count: 0,
            source_document: String::new(),
            start_line,
            end_line,
        }
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn apply_enrichment(&mut self, result: EnrichmentResult) {
        self.title = result.title;
        self.summary = result.summary;
        self.keywords = result.keywords;
        self.entities = result.entities;
        self.questions = result.questions;
        self.key = result.key;
        self.related_keys = result.related_keys;
    }
}

/// Occurrence record for one rolling key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RollingKeyEntry {
    /// 1-based index of the chunk that introduced the key.
    pub first_chunk: usize,
    /// 1-based index of the chunk that used the key most recently.
    pub last_chunk: usize,
    pub count: u64,
}

/// Capacity-bounded, insertion-ordered map of semantic keys seen so far.
///
/// When an insert pushes the map past capacity, the least-recently-seen
/// entry (minimum `last_chunk`, ties broken by minimum `first_chunk`) is
/// evicted.
#[derive(Debug, Clone)]
pub struct RollingKeyDict {
    entries: IndexMap<String, RollingKeyEntry>,
    capacity: usize,
}

impl RollingKeyDict {
    pub fn new(capacity: usize) -> Self {
        debug_assert!(capacity >= 1);
        RollingKeyDict {
            entries: IndexMap::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&RollingKeyEntry> {
        self.entries.get(key)
    }

    /// Key names in insertion order.
    pub fn key_names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &RollingKeyEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Record that `key` was produced for the chunk at `chunk_index` (1-based).
    ///
    /// Existing keys get `count += 1` and a refreshed `last_chunk`; new keys
    /// are inserted. Returns the evicted entry when the insert exceeded
    /// capacity.
    pub fn record_use(
        &mut self,
        key: &str,
        chunk_index: usize,
    ) -> Option<(String, RollingKeyEntry)> {
        if let Some(entry) = self.entries.get_mut(key) {
            entry.count += 1;
            entry.last_chunk = chunk_index;
            return None;
        }
        self.entries.insert(
            key.to_string(),
            RollingKeyEntry {
                first_chunk: chunk_index,
                last_chunk: chunk_index,
                count: 1,
            },
        );
        if self.entries.len() > self.capacity {
            let victim = self
                .entries
                .iter()
                .min_by_key(|(_, e)| (e.last_chunk, e.first_chunk))
                .map(|(k, _)| k.clone())
                .expect("dict over capacity is non-empty");
            let entry = self
                .entries
                .shift_remove(&victim)
                .expect("victim key present");
            return Some((victim, entry));
        }
        None
    }
}

/// Normalize a raw semantic key: lowercase, trim, collapse internal
/// whitespace. Returns an empty string when fewer than two words remain
/// (single-word keys are rejected).
pub fn normalize_key(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let words: Vec<&str> = lowered.split_whitespace().collect();
    if words.len() < 2 {
        return String::new();
    }
    words.join(" ")
}
