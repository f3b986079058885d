//! Token-level contract checks for generated sources.
//!
//! These are not a C++ parser. The external compiler is the syntax authority;
//! lints only catch contract breaches (a testbench inside the model, a
//! testbench without an entry point or logging) before a compile is spent.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::artifact::{ArtifactKind, GeneratedArtifact};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Fatal,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub location: Option<usize>,
}

impl LintFinding {
    fn fatal(code: &str, message: String, location: Option<usize>) -> Self {
        Self {
            severity: Severity::Fatal,
            code: code.into(),
            message,
            location,
        }
    }

    fn warn(code: &str, message: String) -> Self {
        Self {
            severity: Severity::Warn,
            code: code.into(),
            message,
            location: None,
        }
    }

    pub fn is_fatal(&self) -> bool {
        self.severity == Severity::Fatal
    }
}

impl core::fmt::Display for LintFinding {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let sev = match self.severity {
            Severity::Fatal => "fatal",
            Severity::Warn => "warn",
        };
        match self.location {
            Some(line) => write!(f, "[{sev}] {} (line {line}): {}", self.code, self.message),
            None => write!(f, "[{sev}] {}: {}", self.code, self.message),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LintContext<'a> {
    /// File name the testbench must include.
    pub header_name: &'a str,
}

impl Default for LintContext<'_> {
    fn default() -> Self {
        Self {
            header_name: "chiplet_core.h",
        }
    }
}

/// Source lines with `//` comments removed, paired with 1-based numbers.
fn code_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content.lines().enumerate().map(|(i, line)| {
        let code = match line.find("//") {
            Some(pos) => &line[..pos],
            None => line,
        };
        (i + 1, code)
    })
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Byte offsets of `token` in `line` where it is not part of a longer identifier.
fn token_positions<'a>(line: &'a str, token: &'a str) -> impl Iterator<Item = usize> + 'a {
    let bytes = line.as_bytes();
    line.match_indices(token).map(|(i, _)| i).filter(move |&i| {
        let before_ok = i == 0 || !is_ident_byte(bytes[i - 1]);
        let end = i + token.len();
        let after_ok = end >= bytes.len() || !is_ident_byte(bytes[end]);
        before_ok && after_ok
    })
}

fn has_token(content: &str, token: &str) -> bool {
    code_lines(content).any(|(_, line)| token_positions(line, token).next().is_some())
}

/// First line where `name` is followed by `(`, i.e. a call or definition.
fn function_line(content: &str, name: &str) -> Option<usize> {
    code_lines(content).find_map(|(no, line)| {
        token_positions(line, name)
            .any(|i| line[i + name.len()..].trim_start().starts_with('('))
            .then_some(no)
    })
}

fn includes(content: &str, header: &str) -> bool {
    content.lines().any(|line| {
        let Some(rest) = line.trim_start().strip_prefix('#') else {
            return false;
        };
        let Some(rest) = rest.trim_start().strip_prefix("include") else {
            return false;
        };
        let target = rest.trim();
        let inner = target
            .strip_prefix('"')
            .and_then(|t| t.split('"').next())
            .or_else(|| target.strip_prefix('<').and_then(|t| t.split('>').next()));
        inner.is_some_and(|path| path == header || path.rsplit('/').next() == Some(header))
    })
}

/// Deterministic contract checks for one artifact. Never mutates it.
pub fn lint_artifact(artifact: &GeneratedArtifact, ctx: &LintContext<'_>) -> Vec<LintFinding> {
    let content = artifact.content.as_str();
    let mut findings = Vec::new();
    if content.trim().is_empty() {
        findings.push(LintFinding::fatal("empty_artifact", format!("{} is empty", artifact.file_name), None));
        return findings;
    }
    match artifact.kind {
        ArtifactKind::ModelHeader => {
            for entry in ["sc_main", "main"] {
                if let Some(line) = function_line(content, entry) {
                    findings.push(LintFinding::fatal(
                        "tb_in_model",
                        format!("model header defines or calls `{entry}`; the testbench owns the entry point"),
                        Some(line),
                    ));
                }
            }
            let has_module = ["SC_MODULE", "sc_module", "sca_module", "SCA_TDF_MODULE"]
                .iter()
                .any(|t| has_token(content, t));
            if !has_module {
                findings.push(LintFinding::warn(
                    "no_module_class",
                    String::from("no sc_module / SC_MODULE declaration found"),
                ));
            }
            if !content.contains("#pragma once") && !content.contains("#ifndef") {
                findings.push(LintFinding::warn(
                    "missing_include_guard",
                    String::from("header has neither #pragma once nor an #ifndef guard"),
                ));
            }
        }
        ArtifactKind::TestbenchMain => {
            if !has_token(content, "sc_main") {
                findings.push(LintFinding::fatal(
                    "missing_entry_point",
                    String::from("testbench has no sc_main"),
                    None,
                ));
            }
            if !includes(content, ctx.header_name) {
                findings.push(LintFinding::fatal(
                    "missing_dut_include",
                    format!("testbench does not #include \"{}\"", ctx.header_name),
                    None,
                ));
            }
            if !content.contains(".csv") {
                findings.push(LintFinding::fatal(
                    "missing_logging",
                    String::from("testbench never references a .csv log"),
                    None,
                ));
            }
            if !content.contains(".txt") {
                findings.push(LintFinding::fatal(
                    "missing_report",
                    String::from("testbench never references a .txt verification report"),
                    None,
                ));
            }
        }
        ArtifactKind::Other => {}
    }
    findings
}

pub fn has_fatal(findings: &[LintFinding]) -> bool {
    findings.iter().any(LintFinding::is_fatal)
}
