//! Helpers shared by the integration test suites.

#![allow(dead_code)]

use std::path::PathBuf;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root")
}

pub fn corpus_dir() -> PathBuf {
    workspace_root().join("corpus")
}

pub fn schema_path() -> PathBuf {
    workspace_root().join("schema/chunk.schema.json")
}

/// Deterministic xorshift64* generator for fuzz streams; no external deps.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.below(100) < percent
    }
}

/// Inclusive 1-based line span of a construct in a source document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start_line: usize,
    pub end_line: usize,
}

fn fence_marker(line: &str) -> Option<(char, usize)> {
    let trimmed = line.trim_start();
    let leading = line.len() - trimmed.len();
    if leading >= 4 {
        return None;
    }
    let first = trimmed.chars().next()?;
    if first != '`' && first != '~' {
        return None;
    }
    let run = trimmed.chars().take_while(|&c| c == first).count();
    (run >= 3).then_some((first, run))
}

/// Line spans of every fenced code block in the source; an unterminated
/// fence spans to the last line.
pub fn source_fence_spans(document: &str) -> Vec<SourceSpan> {
    let mut spans = Vec::new();
    let mut open: Option<(char, usize, usize)> = None; // char, len, start line
    let mut last_line = 0;
    for (i, line) in document.lines().enumerate() {
        last_line = i + 1;
        match open {
            None => {
                if let Some((ch, len)) = fence_marker(line) {
                    open = Some((ch, len, i + 1));
                }
            }
            Some((ch, len, start)) => {
                let trimmed = line.trim();
                let closes = !trimmed.is_empty()
                    && trimmed.chars().all(|c| c == ch)
                    && trimmed.chars().count() >= len;
                if closes {
                    spans.push(SourceSpan { start_line: start, end_line: i + 1 });
                    open = None;
                }
            }
        }
    }
    if let Some((_, _, start)) = open {
        spans.push(SourceSpan { start_line: start, end_line: last_line });
    }
    spans
}

fn is_separator_row(line: &str) -> bool {
    let trimmed = line.trim();
    !trimmed.is_empty()
        && trimmed.contains('-')
        && trimmed.contains('|')
        && trimmed.chars().all(|c| matches!(c, '-' | ':' | '|' | ' '))
}

/// Line spans of every pipe table (header row, separator, body rows) in
/// the source, skipping fenced regions.
pub fn source_table_spans(document: &str) -> Vec<SourceSpan> {
    let fences = source_fence_spans(document);
    let in_fence = |line: usize| {
        fences
            .iter()
            .any(|s| (s.start_line..=s.end_line).contains(&line))
    };
    let lines: Vec<&str> = document.lines().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let lineno = i + 1;
        if !in_fence(lineno)
            && !in_fence(lineno + 1)
            && lines[i].contains('|')
            && i + 1 < lines.len()
            && is_separator_row(lines[i + 1])
        {
            let start = lineno;
            let mut j = i + 2;
            while j < lines.len() && !lines[j].trim().is_empty() && lines[j].contains('|') {
                j += 1;
            }
            spans.push(SourceSpan { start_line: start, end_line: j });
            i = j;
        } else {
            i += 1;
        }
    }
    spans
}

/// Number of fence-delimiter lines inside a chunk's text.
pub fn fence_delimiter_count(text: &str) -> usize {
    text.lines().filter(|l| fence_marker(l).is_some()).count()
}

/// Every table separator row inside a chunk must sit directly below a
/// pipe-bearing header row within the same chunk.
pub fn tables_complete_within(text: &str) -> bool {
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if is_separator_row(line) {
            let has_header = i > 0 && lines[i - 1].contains('|');
            if !has_header {
                return false;
            }
        }
    }
    true
}

/// A fully populated enrichment response for scripted mocks.
pub fn enrichment_response(key: &str) -> String {
    serde_json::json!({
        "title": format!("Title for {key}"),
        "summary": format!("A summary describing {key} in detail."),
        "keywords": ["alpha", "beta", "gamma"],
        "entities": [{"name": "Subject", "type": "CONCEPT"}],
        "questions": [format!("What is {key}?")],
        "key": key,
        "related_keys": [],
    })
    .to_string()
}
