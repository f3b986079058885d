use serde::{Deserialize, Serialize};
use thiserror::Error;

use ds2sc_core::GeneratedArtifact;

use super::{DebugContext, DebugVariant};
use crate::llm::AgentKind;
use crate::spec_ir::{SpecIrDocument, SpecIrTemplate};

const SPEC_PARSING: &str = include_str!("../../prompts/spec_parsing.txt");
const CODE_GEN: &str = include_str!("../../prompts/code_gen.txt");
const TB_GEN: &str = include_str!("../../prompts/tb_gen.txt");
const DEBUG: &str = include_str!("../../prompts/debug.txt");

/// Shipped prompt text for an agent kind.
pub fn prompt_source(kind: AgentKind) -> &'static str {
    match kind {
        AgentKind::SpecParsing => SPEC_PARSING,
        AgentKind::CodeGen => CODE_GEN,
        AgentKind::TbGen => TB_GEN,
        AgentKind::Debug => DEBUG,
    }
}

/// Section labels each prompt must carry, in order.
pub fn expected_labels(kind: AgentKind) -> &'static [&'static str] {
    match kind {
        AgentKind::SpecParsing => &[
            "Role Definition & Task Assignment",
            "Strict Boundary Constraints",
            "Denoising",
            "Output Format Construction",
        ],
        AgentKind::CodeGen => &[
            "Role Definition & Task Isolation",
            "Architecture & Interface Synthesis",
            "Event-Driven Behavioral Threading",
            "Header-only Output Constraint",
        ],
        AgentKind::TbGen => &[
            "Role Definition & Black-Box Assembly",
            "Stimulus Synthesis & Dynamic Synchronization",
            "Simulation Data Logging & Report Generation",
            "Top-Level Execution Constraint",
        ],
        AgentKind::Debug => &[
            "Role Definition & Dynamic Inputs",
            "Chain-of-Thought (CoT) Reasoning",
            "Mandatory Output Constraints",
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub sections: Vec<(String, String)>,
    /// System prompt: every section as `## label` followed by its text.
    pub rendered: String,
    /// Dynamic inputs, verbatim.
    pub user_payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("{kind} prompt is missing input `{input}`")]
    MissingInput { kind: AgentKind, input: &'static str },
    #[error("prompt text references unknown placeholder `{{{{{0}}}}}`")]
    UnknownPlaceholder(String),
    #[error("{kind} prompt sections {found:?} do not match the expected labels")]
    Labels { kind: AgentKind, found: Vec<String> },
}

/// Everything a prompt might need; each kind checks for its own inputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct PromptInputs<'a> {
    pub template: Option<&'a SpecIrTemplate>,
    pub datasheet: Option<&'a str>,
    pub spec: Option<&'a SpecIrDocument>,
    pub header: Option<&'a GeneratedArtifact>,
    pub debug: Option<&'a DebugContext>,
    pub names: FileNames<'a>,
}

#[derive(Debug, Clone, Copy)]
pub struct FileNames<'a> {
    pub header: &'a str,
    pub testbench: &'a str,
    pub csv: &'a str,
    pub report: &'a str,
}

impl Default for FileNames<'_> {
    fn default() -> Self {
        Self {
            header: "chiplet_core.h",
            testbench: "main.cpp",
            csv: "results.csv",
            report: "report.txt",
        }
    }
}

/// Replaces `{{name}}` placeholders; unknown names are an error.
pub fn substitute(text: &str, vars: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find("}}")
            .ok_or_else(|| PromptError::UnknownPlaceholder(after.chars().take(20).collect()))?;
        let key = after[..end].trim();
        let value = vars
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| PromptError::UnknownPlaceholder(key.to_string()))?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

fn split_sections(text: &str) -> Vec<(String, String)> {
    let mut sections: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        if let Some(label) = line.strip_prefix("## ") {
            sections.push((label.trim().to_string(), String::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push_str(line);
            body.push('\n');
        }
    }
    for (_, body) in &mut sections {
        let trimmed = body.trim().to_string();
        *body = trimmed;
    }
    sections
}

fn block(title: &str, body: &str) -> String {
    let mut s = format!("### {title}\n{body}");
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s.push('\n');
    s
}

fn missing(kind: AgentKind, input: &'static str) -> PromptError {
    PromptError::MissingInput { kind, input }
}

pub fn build_prompt(kind: AgentKind, inputs: &PromptInputs<'_>) -> Result<PromptBundle, PromptError> {
    let names = inputs.names;
    let domain = inputs
        .template
        .map(|t| t.domain)
        .or(inputs.spec.map(|s| s.domain))
        .or(inputs.debug.and_then(|d| d.spec_ir.as_ref()).map(|s| s.domain))
        .map(|d| d.as_str())
        .unwrap_or("mixed-signal");
    let vars = [
        ("domain", domain),
        ("header_name", names.header),
        ("tb_name", names.testbench),
        ("csv_name", names.csv),
        ("report_name", names.report),
    ];
    let sections = split_sections(&substitute(prompt_source(kind), &vars)?);
    let labels: Vec<String> = sections.iter().map(|(l, _)| l.clone()).collect();
    if labels != expected_labels(kind) {
        return Err(PromptError::Labels { kind, found: labels });
    }

    let user_payload = match kind {
        AgentKind::SpecParsing => {
            let t = inputs.template.ok_or(missing(kind, "template"))?;
            let ds = inputs.datasheet.filter(|d| !d.trim().is_empty()).ok_or(missing(kind, "datasheet"))?;
            block("Spec IR Template", &t.to_json_pretty()) + &block("Datasheet", ds)
        }
        AgentKind::CodeGen => {
            let spec = inputs.spec.ok_or(missing(kind, "spec"))?;
            block("Spec IR", &spec.to_json_pretty())
        }
        AgentKind::TbGen => {
            let spec = inputs.spec.ok_or(missing(kind, "spec"))?;
            let header = inputs.header.ok_or(missing(kind, "header"))?;
            block("Spec IR", &spec.to_json_pretty())
                + &block(&format!("Model Header ({})", header.file_name), &header.content)
        }
        AgentKind::Debug => {
            let ctx = inputs.debug.ok_or(missing(kind, "debug context"))?;
            debug_payload(ctx)
        }
    };

    let rendered = sections
        .iter()
        .map(|(label, body)| format!("## {label}\n{body}\n"))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(PromptBundle {
        sections,
        rendered,
        user_payload,
    })
}

fn debug_payload(ctx: &DebugContext) -> String {
    let mut out = match ctx.variant {
        DebugVariant::Syntax => block("Failure", "Compilation failed."),
        DebugVariant::Functional => block("Failure", "The simulation ran but verification did not pass."),
    };
    for note in &ctx.notes {
        out.push_str(&block("Note", note));
    }
    if let Some(log) = &ctx.error_log {
        out.push_str(&block("Compiler Error Log", log));
    }
    if let Some(csv) = &ctx.csv_text {
        out.push_str(&block("Simulation CSV", csv));
    }
    if let Some(report) = &ctx.report_text {
        out.push_str(&block("Verification Report", report));
    }
    if let Some(spec) = &ctx.spec_ir {
        out.push_str(&block("Spec IR", &spec.to_json_pretty()));
    }
    for src in &ctx.sources {
        out.push_str(&block(&format!("Current Source: {} (revision {})", src.file_name, src.revision), &src.content));
    }
    out
}
