//! Full-file artifacts and the fenced-block grammar used to extract them.
//!
//! A model response carries each source file as a Markdown fenced block whose
//! first non-blank line is the marker
//!
//! ```text
//! // === FILE: chiplet_core.h ===
//! ```
//!
//! and whose remaining lines are the complete file content. Partial files are
//! rejected: the caller overwrites the workspace copy with whatever is returned.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MARKER_PREFIX: &str = "// === FILE: ";
pub const MARKER_SUFFIX: &str = " ===";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    ModelHeader,
    TestbenchMain,
    Other,
}

impl ArtifactKind {
    pub fn from_file_name(name: &str) -> Self {
        let base = name.rsplit('/').next().unwrap_or(name);
        if base == "main.cpp" {
            ArtifactKind::TestbenchMain
        } else if base.ends_with(".h") || base.ends_with(".hpp") {
            ArtifactKind::ModelHeader
        } else {
            ArtifactKind::Other
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactOrigin {
    CodeGen,
    TbGen,
    Debug,
    Fixture,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArtifactError {
    #[error("no code block carried a file marker")]
    NoArtifacts,
    #[error("code block at line {start_line} has no file marker")]
    MissingMarker { start_line: usize },
    #[error("code block at line {start_line} has a malformed file marker: `{line}`")]
    MalformedMarker { start_line: usize, line: String },
    #[error("illegal file name `{0}`")]
    IllegalFileName(String),
    #[error("file `{0}` has empty content")]
    EmptyContent(String),
    #[error("file `{file}` looks partial (line {line}: `{text}`)")]
    PartialFile {
        file: String,
        line: usize,
        text: String,
    },
    #[error("file `{0}` appears more than once")]
    DuplicateFile(String),
    #[error("unexpected file `{file}`")]
    UnexpectedFile { file: String },
}

impl ArtifactError {
    /// Stable identifier used in lint findings and logs.
    pub fn code(&self) -> &'static str {
        match self {
            ArtifactError::NoArtifacts => "no_artifact",
            ArtifactError::MissingMarker { .. } => "missing_marker",
            ArtifactError::MalformedMarker { .. } => "malformed_marker",
            ArtifactError::IllegalFileName(_) => "illegal_file_name",
            ArtifactError::EmptyContent(_) => "empty_content",
            ArtifactError::PartialFile { .. } => "partial_file",
            ArtifactError::DuplicateFile(_) => "duplicate_file",
            ArtifactError::UnexpectedFile { .. } => "unexpected_file",
        }
    }
}

/// One generated source file with its revision lineage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedArtifact {
    pub file_name: String,
    pub kind: ArtifactKind,
    pub content: String,
    pub revision: u32,
    pub origin: ArtifactOrigin,
}

impl GeneratedArtifact {
    /// Builds a revision-0 artifact. Content is normalized to end in a newline.
    pub fn new(
        file_name: impl Into<String>,
        content: impl Into<String>,
        origin: ArtifactOrigin,
    ) -> Result<Self, ArtifactError> {
        let file_name = file_name.into();
        validate_file_name(&file_name)?;
        let mut content = content.into();
        if content.trim().is_empty() {
            return Err(ArtifactError::EmptyContent(file_name));
        }
        if !content.ends_with('\n') {
            content.push('\n');
        }
        Ok(Self {
            kind: ArtifactKind::from_file_name(&file_name),
            file_name,
            content,
            revision: 0,
            origin,
        })
    }

    pub fn with_revision(mut self, revision: u32) -> Self {
        self.revision = revision;
        self
    }

    /// Renders the artifact in the exact form [`extract_artifacts`] accepts.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.content.len() + self.file_name.len() + 32);
        out.push_str("```cpp\n");
        out.push_str(MARKER_PREFIX);
        out.push_str(&self.file_name);
        out.push_str(MARKER_SUFFIX);
        out.push('\n');
        out.push_str(&self.content);
        out.push_str("```\n");
        out
    }
}

/// Relative, forward-slash path with no traversal and no absolute prefix.
pub fn validate_file_name(name: &str) -> Result<(), ArtifactError> {
    let illegal = || ArtifactError::IllegalFileName(name.to_string());
    if name.is_empty() || name.len() > 255 {
        return Err(illegal());
    }
    if name.starts_with('/') || name.starts_with('\\') || name.contains('\\') {
        return Err(illegal());
    }
    let bytes = name.as_bytes();
    if bytes.len() >= 2 && bytes[1] == b':' && bytes[0].is_ascii_alphabetic() {
        return Err(illegal());
    }
    if name
        .chars()
        .any(|c| c.is_control() || c.is_whitespace() || c == ':')
    {
        return Err(illegal());
    }
    if name.split('/').any(|seg| seg.is_empty() || seg == "." || seg == "..") {
        return Err(illegal());
    }
    Ok(())
}

/// A fenced code block. `body` excludes both fence lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeBlock {
    pub language_tag: String,
    pub body: String,
    /// 1-based line number of the opening fence.
    pub start_line: usize,
    /// The closing fence was missing; the block runs to end of text.
    pub unterminated: bool,
}

fn strip_eol(line: &str) -> &str {
    let line = line.strip_suffix('\n').unwrap_or(line);
    line.strip_suffix('\r').unwrap_or(line)
}

fn backtick_run(line: &str) -> usize {
    line.bytes().take_while(|&b| b == b'`').count()
}

/// All triple-backtick fenced blocks in order. Fences only count at the start
/// of a line; a closing fence is a line of at least as many backticks as the
/// opener and nothing else.
pub fn extract_code_blocks(text: &str) -> Vec<CodeBlock> {
    struct Open {
        tag: String,
        fence: usize,
        start_line: usize,
        body_start: usize,
    }

    let mut blocks = Vec::new();
    let mut open: Option<Open> = None;
    let mut offset = 0;
    for (idx, raw) in text.split_inclusive('\n').enumerate() {
        let line = strip_eol(raw);
        let ticks = backtick_run(line);
        match &open {
            None if ticks >= 3 => {
                let info = line[ticks..].trim();
                if !info.contains('`') {
                    open = Some(Open {
                        tag: info.split_whitespace().next().unwrap_or("").to_string(),
                        fence: ticks,
                        start_line: idx + 1,
                        body_start: offset + raw.len(),
                    });
                }
            }
            Some(o) if ticks >= o.fence && line[ticks..].trim().is_empty() => {
                blocks.push(CodeBlock {
                    language_tag: o.tag.clone(),
                    body: text[o.body_start..offset].to_string(),
                    start_line: o.start_line,
                    unterminated: false,
                });
                open = None;
            }
            _ => {}
        }
        offset += raw.len();
    }
    if let Some(o) = open {
        blocks.push(CodeBlock {
            language_tag: o.tag,
            body: text[o.body_start.min(text.len())..].to_string(),
            start_line: o.start_line,
            unterminated: true,
        });
    }
    blocks
}

fn parse_marker_line(line: &str, lenient: bool) -> Option<&str> {
    if !lenient {
        let name = line.strip_prefix(MARKER_PREFIX)?.strip_suffix(MARKER_SUFFIX)?;
        return (!name.is_empty() && !name.contains(char::is_whitespace)).then_some(name);
    }
    let rest = line.trim().strip_prefix("//")?.trim_start();
    let rest = rest.strip_prefix("===")?.trim_start();
    let rest = rest.strip_prefix("FILE")?.trim_start();
    let rest = rest.strip_prefix(':')?;
    let name = rest.trim_end().strip_suffix("===")?.trim();
    (!name.is_empty() && !name.contains(char::is_whitespace)).then_some(name)
}

/// Splits a block into `(file_name, remainder)` using its first non-blank line.
pub fn parse_file_marker(block: &CodeBlock, lenient: bool) -> Result<(String, String), ArtifactError> {
    let mut offset = 0;
    for raw in block.body.split_inclusive('\n') {
        let line = strip_eol(raw);
        if line.trim().is_empty() {
            offset += raw.len();
            continue;
        }
        let Some(name) = parse_marker_line(line, lenient) else {
            return Err(if line.contains("FILE") {
                ArtifactError::MalformedMarker {
                    start_line: block.start_line,
                    line: line.to_string(),
                }
            } else {
                ArtifactError::MissingMarker {
                    start_line: block.start_line,
                }
            });
        };
        validate_file_name(name)?;
        let remainder = block.body[offset + raw.len()..].to_string();
        return Ok((name.to_string(), remainder));
    }
    Err(ArtifactError::MissingMarker {
        start_line: block.start_line,
    })
}

/// First line (1-based) that looks like an elision instead of real code.
pub fn find_partial_line(content: &str) -> Option<(usize, &str)> {
    content.lines().enumerate().find_map(|(i, line)| {
        let t = line.trim();
        let elided = t == "..."
            || t == "// ..."
            || t.to_ascii_lowercase().contains("rest of file unchanged");
        elided.then_some((i + 1, t))
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Tolerate extra or missing spaces inside the file marker.
    pub lenient_marker: bool,
    /// Skip the partial-file heuristics.
    pub allow_partial: bool,
}

/// Extracts every marked full-file block from a response.
///
/// Blocks without any file marker (for example snippets quoted while
/// reasoning) are skipped; a block whose marker is present but malformed is an
/// error. Block order is preserved.
pub fn extract_artifacts(
    text: &str,
    expected: Option<&[&str]>,
    origin: ArtifactOrigin,
    opts: ExtractOptions,
) -> Result<Vec<GeneratedArtifact>, ArtifactError> {
    let mut out: Vec<GeneratedArtifact> = Vec::new();
    for block in extract_code_blocks(text) {
        let (name, content) = match parse_file_marker(&block, opts.lenient_marker) {
            Ok(parsed) => parsed,
            Err(ArtifactError::MissingMarker { .. }) => continue,
            Err(e) => return Err(e),
        };
        if !opts.allow_partial {
            if let Some((line, text)) = find_partial_line(&content) {
                return Err(ArtifactError::PartialFile {
                    file: name,
                    line,
                    text: text.to_string(),
                });
            }
        }
        if out.iter().any(|a| a.file_name == name) {
            return Err(ArtifactError::DuplicateFile(name));
        }
        if let Some(allowed) = expected {
            if !allowed.contains(&name.as_str()) {
                return Err(ArtifactError::UnexpectedFile { file: name });
            }
        }
        out.push(GeneratedArtifact::new(name, content, origin)?);
    }
    if out.is_empty() {
        return Err(ArtifactError::NoArtifacts);
    }
    Ok(out)
}
