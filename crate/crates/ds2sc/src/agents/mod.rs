//! The four agents: prompt assembly, the gateway call and the contract
//! checks that decide whether an answer is accepted or retried.

mod prompt;
mod spec_parsing;

pub use prompt::{
    build_prompt, expected_labels, prompt_source, substitute, FileNames, PromptBundle, PromptError, PromptInputs,
};
pub use spec_parsing::{run_spec_parsing, SpecParsingOptions};

pub use ds2sc_core::lint::{has_fatal, lint_artifact, LintContext, LintFinding, Severity};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use ds2sc_core::artifact::{extract_artifacts, ArtifactError, ExtractOptions};
use ds2sc_core::{ArtifactKind, ArtifactOrigin, GeneratedArtifact};

use crate::llm::{AgentKind, Gateway, LlmError, LlmRequest};
use crate::spec_ir::{SpecIrDocument, ValidationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub temperature: f64,
    pub max_retries_on_contract_violation: u32,
    pub max_output_chars: usize,
}

impl AgentConfig {
    pub fn default_for(kind: AgentKind) -> Self {
        let temperature = match kind {
            AgentKind::SpecParsing => 0.2,
            AgentKind::CodeGen | AgentKind::TbGen => 0.4,
            AgentKind::Debug => 0.3,
        };
        Self {
            temperature,
            max_retries_on_contract_violation: 2,
            max_output_chars: 400_000,
        }
    }
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self::default_for(AgentKind::CodeGen)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] LlmError),
    #[error("{kind} output still violates its contract after {attempts} attempt(s):\n{}", findings.join("\n"))]
    ContractViolation {
        kind: AgentKind,
        attempts: u32,
        findings: Vec<String>,
        report: Option<ValidationReport>,
    },
    #[error("invalid debug context: {0}")]
    Context(String),
}

impl AgentError {
    pub fn is_environmental(&self) -> bool {
        matches!(self, AgentError::Gateway(e) if e.is_environmental())
    }
}

/// What an accepted agent answer cost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRun<T> {
    pub value: T,
    pub attempts: u32,
    pub digests: Vec<String>,
}

/// Contract check outcome for one response.
pub(crate) enum Check<T> {
    Accept(T),
    Reject { findings: Vec<String>, report: Option<ValidationReport> },
}

/// Payload for the next attempt: the original request followed by the
/// previous attempt's findings, verbatim.
pub fn retry_payload(original: &str, findings: &[String]) -> String {
    let mut p = String::from(original);
    if !p.ends_with('\n') {
        p.push('\n');
    }
    p.push_str("\n### Previous Attempt Violations\n");
    for f in findings {
        p.push_str(f);
        p.push('\n');
    }
    p
}

pub(crate) fn call_with_retries<T>(
    gw: &mut Gateway,
    kind: AgentKind,
    cfg: &AgentConfig,
    bundle: &PromptBundle,
    mut check: impl FnMut(&str) -> Check<T>,
) -> Result<AgentRun<T>, AgentError> {
    let attempts = cfg.max_retries_on_contract_violation + 1;
    let mut payload = bundle.user_payload.clone();
    let mut digests = Vec::new();
    let mut last = (Vec::new(), None);
    for attempt in 1..=attempts {
        let req = LlmRequest {
            system_prompt: bundle.rendered.clone(),
            user_payload: payload.clone(),
            temperature: cfg.temperature,
            max_output_chars: cfg.max_output_chars,
            agent_kind: kind,
        };
        digests.push(req.digest());
        let resp = gw.complete(&req)?;
        let verdict = if resp.truncated {
            Check::Reject {
                findings: vec!["[fatal] truncated_output: the response was cut off; answer again in full".into()],
                report: None,
            }
        } else {
            check(&resp.text)
        };
        match verdict {
            Check::Accept(value) => {
                if attempt > 1 {
                    log::info!("{kind} accepted after {} retr{}", attempt - 1, if attempt == 2 { "y" } else { "ies" });
                }
                return Ok(AgentRun { value, attempts: attempt, digests });
            }
            Check::Reject { findings, report } => {
                log::warn!("{kind} attempt {attempt}/{attempts} rejected: {}", findings.join("; "));
                payload = retry_payload(&bundle.user_payload, &findings);
                last = (findings, report);
            }
        }
    }
    Err(AgentError::ContractViolation {
        kind,
        attempts,
        findings: last.0,
        report: last.1,
    })
}

fn artifact_finding(e: &ArtifactError) -> String {
    format!("[fatal] {}: {e}", e.code())
}

fn lint_findings(a: &GeneratedArtifact, header_name: &str) -> Vec<String> {
    let findings = lint_artifact(a, &LintContext { header_name });
    if has_fatal(&findings) {
        findings.iter().filter(|f| f.is_fatal()).map(|f| format!("{}: {f}", a.file_name)).collect()
    } else {
        for f in &findings {
            log::info!("{}: {f}", a.file_name);
        }
        Vec::new()
    }
}

fn reject<T>(findings: Vec<String>) -> Check<T> {
    Check::Reject { findings, report: None }
}

/// Accepts a response holding exactly one file named `name` that passes its lints.
fn single_file(text: &str, name: &str, origin: ArtifactOrigin, header_name: &str) -> Check<GeneratedArtifact> {
    let artifacts = match extract_artifacts(text, None, origin, ExtractOptions::default()) {
        Ok(a) => a,
        Err(e) => return reject(vec![artifact_finding(&e)]),
    };
    if artifacts.len() != 1 || artifacts[0].file_name != name {
        let got: Vec<_> = artifacts.iter().map(|a| a.file_name.as_str()).collect();
        return reject(vec![format!(
            "[fatal] unexpected_file_count: expected exactly one file `{name}`, got {got:?}"
        )]);
    }
    let a = artifacts.into_iter().next().expect("one artifact");
    let findings = lint_findings(&a, header_name);
    if findings.is_empty() {
        Check::Accept(a)
    } else {
        reject(findings)
    }
}

pub fn run_code_generation(
    spec: &SpecIrDocument,
    gw: &mut Gateway,
    cfg: &AgentConfig,
    names: FileNames<'_>,
) -> Result<AgentRun<GeneratedArtifact>, AgentError> {
    let inputs = PromptInputs {
        spec: Some(spec),
        names,
        ..Default::default()
    };
    let bundle = build_prompt(AgentKind::CodeGen, &inputs)?;
    call_with_retries(gw, AgentKind::CodeGen, cfg, &bundle, |text| {
        single_file(text, names.header, ArtifactOrigin::CodeGen, names.header)
    })
}

pub fn run_testbench_generation(
    spec: &SpecIrDocument,
    header: &GeneratedArtifact,
    gw: &mut Gateway,
    cfg: &AgentConfig,
    names: FileNames<'_>,
) -> Result<AgentRun<GeneratedArtifact>, AgentError> {
    let inputs = PromptInputs {
        spec: Some(spec),
        header: Some(header),
        names,
        ..Default::default()
    };
    let bundle = build_prompt(AgentKind::TbGen, &inputs)?;
    call_with_retries(gw, AgentKind::TbGen, cfg, &bundle, |text| {
        single_file(text, names.testbench, ArtifactOrigin::TbGen, &header.file_name)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DebugVariant {
    Syntax,
    Functional,
}

/// Evidence handed to the debugging agent.
#[derive(Debug, Clone, PartialEq)]
pub struct DebugContext {
    pub variant: DebugVariant,
    pub sources: Vec<GeneratedArtifact>,
    pub error_log: Option<String>,
    pub csv_text: Option<String>,
    pub report_text: Option<String>,
    pub spec_ir: Option<SpecIrDocument>,
    /// Packaging remarks (truncation, substitutions) shown to the agent.
    pub notes: Vec<String>,
}

impl DebugContext {
    pub fn validate(&self) -> Result<(), AgentError> {
        let err = |m: &str| Err(AgentError::Context(m.into()));
        if self.sources.is_empty() {
            return err("no sources");
        }
        match self.variant {
            DebugVariant::Syntax if self.error_log.is_none() => err("syntax context needs an error log"),
            DebugVariant::Functional if self.csv_text.is_none() => err("functional context needs CSV text"),
            DebugVariant::Functional if self.report_text.is_none() => err("functional context needs a report"),
            DebugVariant::Functional if self.spec_ir.is_none() => err("functional context needs the Spec IR"),
            _ => Ok(()),
        }
    }
}

/// Returns the repaired files, each one revision above the source it replaces.
pub fn run_debugging(
    ctx: &DebugContext,
    gw: &mut Gateway,
    cfg: &AgentConfig,
    names: FileNames<'_>,
) -> Result<AgentRun<Vec<GeneratedArtifact>>, AgentError> {
    ctx.validate()?;
    let inputs = PromptInputs {
        debug: Some(ctx),
        names,
        ..Default::default()
    };
    let bundle = build_prompt(AgentKind::Debug, &inputs)?;
    let known: Vec<&str> = ctx.sources.iter().map(|s| s.file_name.as_str()).collect();
    let header_name = ctx
        .sources
        .iter()
        .find(|s| s.kind == ArtifactKind::ModelHeader)
        .map(|s| s.file_name.as_str())
        .unwrap_or(names.header);
    call_with_retries(gw, AgentKind::Debug, cfg, &bundle, |text| {
        let fixed = match extract_artifacts(text, Some(&known), ArtifactOrigin::Debug, ExtractOptions::default()) {
            Ok(a) => a,
            Err(e) => return reject(vec![artifact_finding(&e)]),
        };
        let mut findings = Vec::new();
        let mut out = Vec::with_capacity(fixed.len());
        for a in fixed {
            let prev = ctx.sources.iter().find(|s| s.file_name == a.file_name).expect("name checked by extraction");
            let a = a.with_revision(prev.revision + 1);
            findings.extend(lint_findings(&a, header_name));
            out.push(a);
        }
        if findings.is_empty() {
            Check::Accept(out)
        } else {
            reject(findings)
        }
    })
}
