use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn parse(token: &str) -> Option<Self> {
        if token.eq_ignore_ascii_case("pass") {
            Some(Verdict::Pass)
        } else if token.eq_ignore_ascii_case("fail") {
            Some(Verdict::Fail)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCheck {
    pub name: String,
    pub passed: bool,
    pub detail: Option<String>,
}

/// A testbench verification report.
///
/// Grammar: first non-blank line `VERIFICATION RESULT: PASS|FAIL` (any case,
/// optionally wrapped in `[...]`), then any number of
/// `CHECK <name>: PASS|FAIL[ - detail]` lines. Other lines are kept as notes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub verdict: Verdict,
    pub checks: Vec<ReportCheck>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("report is empty")]
    Empty,
    #[error("line {line}: expected `VERIFICATION RESULT: PASS|FAIL`, found `{text}`")]
    NoVerdict { line: usize, text: String },
}

fn parse_verdict_line(line: &str) -> Option<Verdict> {
    let mut t = line.trim();
    if let Some(inner) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
        t = inner.trim();
    }
    let (key, value) = t.split_once(':')?;
    if !key.trim().eq_ignore_ascii_case("verification result") {
        return None;
    }
    Verdict::parse(value.split_whitespace().next()?)
}

fn parse_check_line(line: &str) -> Option<ReportCheck> {
    let t = line.trim();
    let head = t.get(..6)?;
    if !head.eq_ignore_ascii_case("check ") {
        return None;
    }
    let (name, rest) = t[6..].split_once(':')?;
    let rest = rest.trim_start();
    let status_len = rest.find(char::is_whitespace).unwrap_or(rest.len());
    let passed = Verdict::parse(&rest[..status_len])? == Verdict::Pass;
    let detail = rest[status_len..].trim();
    let detail = detail.strip_prefix('-').unwrap_or(detail).trim();
    Some(ReportCheck {
        name: name.trim().to_string(),
        passed,
        detail: (!detail.is_empty()).then(|| detail.to_string()),
    })
}

pub fn parse_report(text: &str) -> Result<Report, ReportError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (line, first) = lines.next().ok_or(ReportError::Empty)?;
    let verdict = parse_verdict_line(first).ok_or_else(|| ReportError::NoVerdict {
        line,
        text: first.trim().to_string(),
    })?;
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for (_, l) in lines {
        match parse_check_line(l) {
            Some(c) => checks.push(c),
            None => notes.push(l.trim().to_string()),
        }
    }
    Ok(Report {
        verdict,
        checks,
        notes,
    })
}

impl Report {
    pub fn render(&self) -> String {
        let mut out = String::from("VERIFICATION RESULT: ");
        out.push_str(self.verdict.as_str());
        out.push('\n');
        for c in &self.checks {
            out.push_str("CHECK ");
            out.push_str(&c.name);
            out.push_str(": ");
            out.push_str(if c.passed { "PASS" } else { "FAIL" });
            if let Some(d) = &c.detail {
                out.push_str(" - ");
                out.push_str(d);
            }
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str(n);
            out.push('\n');
        }
        out
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &ReportCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}
