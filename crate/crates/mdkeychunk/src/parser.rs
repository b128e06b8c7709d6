//! Stage 1: parse Markdown into typed blocks and group them into
//! size-managed chunks that never split atomic constructs.

use std::collections::BTreeSet;

use crate::config::PipelineConfig;
use crate::model::{Block, BlockType, Chunk};

/// Stack of (level, text) heading pairs with strictly increasing levels.
#[derive(Debug, Clone, Default)]
pub struct HeaderStack {
    entries: Vec<(u8, String)>,
}

impl HeaderStack {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pop every entry with level >= the new header's level, then push it.
    pub fn push_header(&mut self, level: u8, text: &str) {
        while self
            .entries
            .last()
            .is_some_and(|(l, _)| *l >= level)
        {
            self.entries.pop();
        }
        self.entries.push((level, text.to_string()));
    }

    /// The current section path, " > "-joined from outermost to innermost.
    pub fn path(&self) -> String {
        self.entries
            .iter()
            .map(|(_, t)| t.as_str())
            .collect::<Vec<_>>()
            .join(" > ")
    }

    pub fn entries(&self) -> &[(u8, String)] {
        &self.entries
    }
}

fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

/// Leading indent width with tabs counted as 4 columns.
fn indent_width(line: &str) -> usize {
    let mut width = 0;
    for ch in line.chars() {
        match ch {
            ' ' => width += 1,
            '\t' => width += 4,
            _ => break,
        }
    }
    width
}

/// Fence opener: up to 3 spaces of indent, then >= 3 backticks or tildes.
/// Returns the fence character and run length.
fn fence_open(line: &str) -> Option<(char, usize)> {
    if indent_width(line) >= 4 {
        return None;
    }
    let trimmed = line.trim_start();
    let first = trimmed.chars().next()?;
    if first != '`' && first != '~' {
        return None;
    }
    let run = trimmed.chars().take_while(|&c| c == first).count();
    if run >= 3 {
        Some((first, run))
    } else {
        None
    }
}

/// Closing fence: same character, at least the opening run length, nothing
/// else on the line.
fn fence_close(line: &str, fence_char: char, open_len: usize) -> bool {
    if indent_width(line) >= 4 {
        return false;
    }
    let trimmed = line.trim();
    !trimmed.is_empty()
        && trimmed.chars().all(|c| c == fence_char)
        && trimmed.chars().count() >= open_len
}

/// ATX header: 1-6 '#' followed by whitespace or end of line.
fn atx_header_level(line: &str) -> Option<u8> {
    if indent_width(line) >= 4 {
        return None;
    }
    let trimmed = line.trim_start();
    let hashes = trimmed.chars().take_while(|&c| c == '#').count();
    if hashes == 0 || hashes > 6 {
        return None;
    }
    match trimmed.chars().nth(hashes) {
        None => Some(hashes as u8),
        Some(c) if c == ' ' || c == '\t' => Some(hashes as u8),
        Some(_) => None,
    }
}

/// Heading text of an ATX header line: marker stripped, optional closing
/// '#' run stripped when preceded by whitespace.
pub fn header_text(line: &str) -> String {
    let trimmed = line.trim_start();
    let hashes = trimmed.chars().take_while(|&c| c == '#').count();
    let rest = trimmed[hashes..].trim();
    if rest.is_empty() {
        return String::new();
    }
    let closing = rest.chars().rev().take_while(|&c| c == '#').count();
    if closing == 0 {
        return rest.to_string();
    }
    let cut: String = rest
        .chars()
        .take(rest.chars().count() - closing)
        .collect();
    if cut.is_empty() {
        // The whole text was a '#' run ("## ###"): nothing remains.
        String::new()
    } else if cut.ends_with(' ') || cut.ends_with('\t') {
        cut.trim_end().to_string()
    } else {
        // "# C#" keeps its trailing '#'.
        rest.to_string()
    }
}

fn is_blockquote(line: &str) -> bool {
    indent_width(line) < 4 && line.trim_start().starts_with('>')
}

/// Bullet (-, *, +) or ordered (1. / 1)) list item with <= 3 spaces of indent.
fn is_list_item(line: &str) -> bool {
    if indent_width(line) >= 4 {
        return false;
    }
    let trimmed = line.trim_start();
    let mut chars = trimmed.chars();
    match chars.next() {
        Some('-') | Some('*') | Some('+') => matches!(chars.next(), Some(' ') | Some('\t') | None),
        Some(c) if c.is_ascii_digit() => {
            let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
            if digits > 9 {
                return false;
            }
            let mut rest = trimmed.chars().skip(digits);
            match rest.next() {
                Some('.') | Some(')') => matches!(rest.next(), Some(' ') | Some('\t') | None),
                _ => false,
            }
        }
        _ => false,
    }
}

/// Indented continuation of a list item: non-blank and starting with whitespace.
fn is_indented_continuation(line: &str) -> bool {
    !is_blank(line) && line.starts_with([' ', '\t'])
}

/// GFM table delimiter row: cells of '-' runs with optional ':' alignment.
fn is_table_separator(line: &str) -> bool {
    let trimmed = line.trim();
    if trimmed.is_empty() || !trimmed.contains('-') {
        return false;
    }
    if !trimmed.chars().all(|c| matches!(c, '-' | ':' | '|' | ' ')) {
        return false;
    }
    // Every cell between pipes must contain a dash run.
    trimmed
        .trim_matches('|')
        .split('|')
        .all(|cell| {
            let cell = cell.trim();
            !cell.is_empty() && cell.contains('-')
        })
}

/// Table start: a pipe-bearing row whose next line is a delimiter row.
fn table_start(lines: &[&str], i: usize) -> bool {
    if indent_width(lines[i]) >= 4 || !lines[i].contains('|') {
        return false;
    }
    lines
        .get(i + 1)
        .is_some_and(|next| is_table_separator(next) && next.contains('|'))
}

fn starts_new_construct(lines: &[&str], i: usize) -> bool {
    let line = lines[i];
    fence_open(line).is_some()
        || atx_header_level(line).is_some()
        || is_blockquote(line)
        || is_list_item(line)
        || table_start(lines, i)
}

/// Parse a Markdown document into ordered, non-overlapping blocks covering
/// every non-blank source line. The parser is total: malformed constructs
/// degrade to paragraphs.
pub fn parse_blocks(document: &str) -> Vec<Block> {
    let lines: Vec<&str> = document.lines().collect();
    let mut blocks = Vec::new();
    let mut i = 0;

    while i < lines.len() {
        let line = lines[i];
        if is_blank(line) {
            i += 1;
            continue;
        }

        if let Some((fence_char, fence_len)) = fence_open(line) {
            let start = i;
            i += 1;
            while i < lines.len() && !fence_close(lines[i], fence_char, fence_len) {
                i += 1;
            }
            if i < lines.len() {
                i += 1; // closing fence
            }
            blocks.push(Block::new(
                BlockType::Code,
                lines[start..i].join("\n"),
                start + 1,
                i,
            ));
        } else if let Some(level) = atx_header_level(line) {
            blocks.push(Block::header(line.to_string(), level, i + 1));
            i += 1;
        } else if is_blockquote(line) {
            let start = i;
            while i < lines.len() && is_blockquote(lines[i]) {
                i += 1;
            }
            blocks.push(Block::new(
                BlockType::Blockquote,
                lines[start..i].join("\n"),
                start + 1,
                i,
            ));
        } else if is_list_item(line) {
            let start = i;
            i += 1;
            while i < lines.len() {
                let l = lines[i];
                if is_blank(l) {
                    // A single blank stays inside the list when another item
                    // or continuation follows directly.
                    let next_continues = lines.get(i + 1).is_some_and(|n| {
                        !is_blank(n) && (is_list_item(n) || is_indented_continuation(n))
                    });
                    if next_continues {
                        i += 1;
                        continue;
                    }
                    break;
                }
                if is_list_item(l) {
                    i += 1;
                    continue;
                }
                if is_indented_continuation(l) {
                    // An indented fence belongs to the item; keep it whole.
                    if let Some((fc, fl)) = fence_open(l) {
                        i += 1;
                        while i < lines.len() && !fence_close(lines[i], fc, fl) {
                            i += 1;
                        }
                        if i < lines.len() {
                            i += 1;
                        }
                    } else {
                        i += 1;
                    }
                    continue;
                }
                break;
            }
            blocks.push(Block::new(
                BlockType::List,
                lines[start..i].join("\n"),
                start + 1,
                i,
            ));
        } else if indent_width(line) >= 4 {
            let start = i;
            while i < lines.len() && !is_blank(lines[i]) && indent_width(lines[i]) >= 4 {
                i += 1;
            }
            blocks.push(Block::new(
                BlockType::Code,
                lines[start..i].join("\n"),
                start + 1,
                i,
            ));
        } else if table_start(&lines, i) {
            let start = i;
            i += 2; // header row + delimiter row
            while i < lines.len() && !is_blank(lines[i]) && lines[i].contains('|') {
                i += 1;
            }
            blocks.push(Block::new(
                BlockType::Table,
                lines[start..i].join("\n"),
                start + 1,
                i,
            ));
        } else {
            let start = i;
            i += 1;
            while i < lines.len() && !is_blank(lines[i]) && !starts_new_construct(&lines, i) {
                i += 1;
            }
            blocks.push(Block::new(
                BlockType::Paragraph,
                lines[start..i].join("\n"),
                start + 1,
                i,
            ));
        }
    }

    blocks
}

struct ChunkBuilder {
    blocks: Vec<Block>,
    size: usize,
    section_title: String,
}

impl ChunkBuilder {
    fn new() -> Self {
        ChunkBuilder {
            blocks: Vec::new(),
            size: 0,
            section_title: String::new(),
        }
    }

    fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    fn push(&mut self, block: Block, block_size: usize, section_path: &str) {
        if self.blocks.is_empty() {
            self.section_title = section_path.to_string();
            self.size = block_size;
        } else {
            self.size += 1 + block_size; // joining newline
        }
        self.blocks.push(block);
    }

    fn finish(&mut self) -> Option<Chunk> {
        if self.blocks.is_empty() {
            return None;
        }
        let text = self
            .blocks
            .iter()
            .map(|b| b.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        let content_types: BTreeSet<BlockType> =
            self.blocks.iter().map(|b| b.block_type).collect();
        let start_line = self.blocks.first().unwrap().start_line;
        let end_line = self.blocks.last().unwrap().end_line;
        let chunk = Chunk::from_parser(
            text,
            std::mem::take(&mut self.section_title),
            content_types,
            start_line,
            end_line,
        );
        self.blocks.clear();
        self.size = 0;
        Some(chunk)
    }
}

/// Group parsed blocks into chunks.
///
/// Blocks accumulate while the joined size stays within `max_chunk_size`;
/// a lone block over the limit becomes its own oversize chunk. A header
/// closes the current chunk once it has reached `min_chunk_size` and its
/// text starts the next chunk. A trailing chunk under `min_chunk_size`
/// folds into the previous chunk when both share a section and the result
/// stays within `max_chunk_size`.
pub fn chunk_document(blocks: Vec<Block>, config: &PipelineConfig) -> Vec<Chunk> {
    let max_size = config.max_chunk_size;
    let min_size = config.min_chunk_size;

    let mut chunks: Vec<Chunk> = Vec::new();
    let mut stack = HeaderStack::new();
    let mut current = ChunkBuilder::new();

    for block in blocks {
        let block_size = block.char_len();

        if block.block_type == BlockType::Header {
            if !current.is_empty() && current.size >= min_size {
                chunks.extend(current.finish());
            }
            let level = block.heading_level.unwrap_or(1);
            stack.push_header(level, &header_text(&block.content));
        }

        if !current.is_empty() && current.size + 1 + block_size > max_size {
            chunks.extend(current.finish());
        }
        let oversize = block_size > max_size;
        current.push(block, block_size, &stack.path());
        if oversize {
            chunks.extend(current.finish());
        }
    }
    chunks.extend(current.finish());

    // Fold an undersized trailing chunk into its same-section predecessor.
    if chunks.len() >= 2 {
        let last = chunks.last().unwrap();
        let prev = &chunks[chunks.len() - 2];
        if last.char_len() < min_size
            && last.section_title == prev.section_title
            && prev.char_len() + 1 + last.char_len() <= max_size
        {
            let tail = chunks.pop().unwrap();
            let prev = chunks.last_mut().unwrap();
            prev.text.push('\n');
            prev.text.push_str(&tail.text);
            prev.end_line = tail.end_line;
            prev.content_types.extend(tail.content_types);
        }
    }

    chunks
}
