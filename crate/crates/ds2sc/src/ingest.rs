//! Datasheet loading: heading-based sectioning, noise removal and
//! context-budget chunking.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use ds2sc_core::Domain;

pub const DEFAULT_CHAR_BUDGET: usize = 400_000;
pub const MIN_CHAR_BUDGET: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    PlainText,
    Markdown,
}

impl SourceFormat {
    /// `.md`/`.markdown` are markdown, everything else plain text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("md" | "markdown") => SourceFormat::Markdown,
            _ => SourceFormat::PlainText,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseClass {
    Packaging,
    Manufacturing,
    TimingSetupHold,
    None,
}

impl NoiseClass {
    pub fn is_noise(self) -> bool {
        self != NoiseClass::None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    /// The heading line exactly as in the source, newline included; empty
    /// for a preamble.
    pub heading: String,
    pub body: String,
    pub page_hint: Option<u32>,
    pub noise_class: Option<NoiseClass>,
}

impl Section {
    pub fn title(&self) -> &str {
        self.heading.trim().trim_start_matches('#').trim()
    }

    pub fn text(&self) -> String {
        let mut s = String::with_capacity(self.heading.len() + self.body.len());
        s.push_str(&self.heading);
        s.push_str(&self.body);
        s
    }

    pub fn char_len(&self) -> usize {
        self.heading.chars().count() + self.body.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Datasheet {
    pub title: String,
    pub sections: Vec<Section>,
    pub source_format: SourceFormat,
}

impl Datasheet {
    pub fn text(&self) -> String {
        self.sections.iter().map(Section::text).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("datasheet is empty")]
    Empty,
    #[error("datasheet is not valid UTF-8 (first bad byte at offset {0})")]
    Undecodable(usize),
}

pub fn ingest_bytes(raw: &[u8], format: SourceFormat) -> Result<Datasheet, IngestError> {
    let text = std::str::from_utf8(raw).map_err(|e| IngestError::Undecodable(e.valid_up_to()))?;
    ingest_text(text, format)
}

/// Splits `raw` into sections at heading lines. Every byte of `raw` lands in
/// exactly one heading or body, so `ingest_text(raw)?.text() == raw`.
pub fn ingest_text(raw: &str, format: SourceFormat) -> Result<Datasheet, IngestError> {
    if raw.trim().is_empty() {
        return Err(IngestError::Empty);
    }
    let has_pages = raw.lines().any(|l| page_marker(l).is_some());
    let mut page = has_pages.then_some(1u32);
    let mut in_fence = false;
    let mut sections: Vec<Section> = Vec::new();
    let mut current = Section {
        heading: String::new(),
        body: String::new(),
        page_hint: page,
        noise_class: None,
    };

    for line in raw.split_inclusive('\n') {
        let bare = line.trim_end_matches(['\n', '\r']);
        if let Some(marker) = page_marker(bare) {
            let next = match marker {
                PageMarker::FormFeed => page.map(|p| p + 1),
                PageMarker::Numbered(n) => Some(n),
            };
            page = page.max(next);
        }
        if format == SourceFormat::Markdown && bare.trim_start().starts_with("```") {
            in_fence = !in_fence;
        }
        let heading = !in_fence
            && match format {
                SourceFormat::Markdown => is_markdown_heading(bare),
                SourceFormat::PlainText => is_plain_heading(bare),
            };
        if heading {
            if !current.heading.is_empty() || !current.body.is_empty() {
                sections.push(current);
            }
            current = Section {
                heading: line.to_string(),
                body: String::new(),
                page_hint: page,
                noise_class: None,
            };
        } else {
            current.body.push_str(line);
        }
    }
    sections.push(current);

    let title = sections
        .iter()
        .find(|s| !s.heading.is_empty())
        .map(|s| s.title().to_string())
        .or_else(|| raw.lines().find(|l| !l.trim().is_empty()).map(|l| l.trim().to_string()))
        .unwrap_or_default();
    Ok(Datasheet {
        title,
        sections,
        source_format: format,
    })
}

enum PageMarker {
    FormFeed,
    Numbered(u32),
}

fn page_marker(line: &str) -> Option<PageMarker> {
    if line.contains('\u{c}') {
        return Some(PageMarker::FormFeed);
    }
    let inner = line.trim().strip_prefix("---")?.strip_suffix("---")?.trim();
    let (word, n) = inner.split_once(char::is_whitespace)?;
    if !word.eq_ignore_ascii_case("page") {
        return None;
    }
    n.trim().parse().ok().map(PageMarker::Numbered)
}

fn is_markdown_heading(line: &str) -> bool {
    let hashes = line.bytes().take_while(|&b| b == b'#').count();
    (1..=6).contains(&hashes) && line[hashes..].starts_with(' ') && !line[hashes..].trim().is_empty()
}

fn is_plain_heading(line: &str) -> bool {
    let t = line.trim();
    if t.is_empty() || t.chars().count() > 80 || t.contains('|') || t.ends_with(['.', ',', ':', ';']) {
        return false;
    }
    let letters: Vec<char> = t.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() >= 3 && letters.iter().all(|c| c.is_uppercase()) {
        return true;
    }
    // "3.2 Register Space"
    let (number, rest) = match t.split_once(char::is_whitespace) {
        Some(parts) => parts,
        None => return false,
    };
    let number = number.trim_end_matches('.');
    !number.is_empty()
        && number.split('.').all(|p| !p.is_empty() && p.len() <= 3 && p.bytes().all(|b| b.is_ascii_digit()))
        && rest.trim_start().starts_with(|c: char| c.is_uppercase())
        && rest.split_whitespace().count() <= 8
}

/// Heading keyword lists per noise class. Protected keywords keep a section
/// regardless of noise matches, per domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub packaging: Vec<String>,
    pub manufacturing: Vec<String>,
    pub timing_setup_hold: Vec<String>,
    pub protected_digital: Vec<String>,
    pub protected_analog: Vec<String>,
    pub protected_rf: Vec<String>,
}

fn strings(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            packaging: strings(&[
                "package",
                "packaging",
                "mechanical",
                "outline",
                "footprint",
                "land pattern",
                "tape and reel",
                "marking",
            ]),
            manufacturing: strings(&[
                "ordering",
                "manufacturing",
                "soldering",
                "reflow",
                "moisture sensitivity",
                "reliability",
                "qualification",
                "revision history",
            ]),
            timing_setup_hold: strings(&["setup", "hold time", "setup/hold"]),
            protected_digital: strings(&["register", "address map", "memory map"]),
            protected_analog: strings(&["electrical characteristics", "transfer"]),
            protected_rf: strings(&["electrical specifications", "performance"]),
        }
    }
}

impl NoiseConfig {
    fn protected(&self, domain: Domain) -> &[String] {
        match domain {
            Domain::Digital => &self.protected_digital,
            Domain::Analog => &self.protected_analog,
            Domain::Rf => &self.protected_rf,
        }
    }

    /// Noise class of a heading, with the keyword that decided it.
    pub fn classify(&self, title: &str, domain: Domain) -> (NoiseClass, Option<&str>) {
        let lower = title.to_lowercase();
        if title.is_empty() || self.protected(domain).iter().any(|k| lower.contains(k.as_str())) {
            return (NoiseClass::None, None);
        }
        let lists = [
            (NoiseClass::Packaging, &self.packaging),
            (NoiseClass::Manufacturing, &self.manufacturing),
            (NoiseClass::TimingSetupHold, &self.timing_setup_hold),
        ];
        for (class, words) in lists {
            if let Some(k) = words.iter().find(|k| lower.contains(k.as_str())) {
                return (class, Some(k.as_str()));
            }
        }
        (NoiseClass::None, None)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedSection {
    pub heading: String,
    pub class: NoiseClass,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Denoised {
    pub datasheet: Datasheet,
    pub removed: Vec<RemovedSection>,
}

/// Classifies every section and drops the noise ones.
pub fn denoise(ds: &Datasheet, domain: Domain, cfg: &NoiseConfig) -> Denoised {
    let mut kept = Vec::with_capacity(ds.sections.len());
    let mut removed = Vec::new();
    for section in &ds.sections {
        let (class, keyword) = cfg.classify(section.title(), domain);
        let mut s = section.clone();
        s.noise_class = Some(class);
        if class.is_noise() {
            let reason = format!("heading matches {class:?} keyword `{}`", keyword.unwrap_or_default());
            log::info!("denoise: dropped `{}` ({reason})", section.title());
            removed.push(RemovedSection {
                heading: section.title().to_string(),
                class,
                reason,
            });
        } else {
            kept.push(s);
        }
    }
    Denoised {
        datasheet: Datasheet {
            title: ds.title.clone(),
            sections: kept,
            source_format: ds.source_format,
        },
        removed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub index: usize,
    pub text: String,
    pub char_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChunkError {
    #[error("chunk budget {0} is below the minimum of {MIN_CHAR_BUDGET} characters")]
    BudgetTooSmall(usize),
    #[error("line {line} is {len} characters, longer than the {budget}-character budget")]
    LineTooLong { line: usize, len: usize, budget: usize },
}

/// Packs whole sections greedily into chunks of at most `char_budget`
/// characters; a section that cannot fit alone is split between lines.
pub fn chunk(ds: &Datasheet, char_budget: usize) -> Result<Vec<Chunk>, ChunkError> {
    if char_budget < MIN_CHAR_BUDGET {
        return Err(ChunkError::BudgetTooSmall(char_budget));
    }
    let text = ds.text();
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let len = line.chars().count();
        if len > char_budget {
            return Err(ChunkError::LineTooLong {
                line: i + 1,
                len,
                budget: char_budget,
            });
        }
    }

    let mut chunks = Vec::new();
    let mut cur = String::new();
    let mut cur_len = 0usize;
    let mut flush = |cur: &mut String, cur_len: &mut usize| {
        if !cur.is_empty() {
            chunks.push(Chunk {
                index: chunks.len(),
                text: std::mem::take(cur),
                char_budget,
            });
            *cur_len = 0;
        }
    };
    for section in &ds.sections {
        let len = section.char_len();
        if cur_len + len <= char_budget {
            cur.push_str(&section.text());
            cur_len += len;
            continue;
        }
        flush(&mut cur, &mut cur_len);
        if len <= char_budget {
            cur.push_str(&section.text());
            cur_len = len;
            continue;
        }
        for line in section.text().split_inclusive('\n') {
            let l = line.chars().count();
            if cur_len + l > char_budget {
                flush(&mut cur, &mut cur_len);
            }
            cur.push_str(line);
            cur_len += l;
        }
    }
    flush(&mut cur, &mut cur_len);
    Ok(chunks)
}
