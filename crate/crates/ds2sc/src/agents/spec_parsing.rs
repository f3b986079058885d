use serde_json::Value;

use super::{call_with_retries, build_prompt, AgentConfig, AgentError, AgentRun, Check, PromptInputs};
use crate::ingest::{chunk, Datasheet, DEFAULT_CHAR_BUDGET};
use crate::llm::{sanitize_structured, AgentKind, Gateway};
use crate::spec_ir::{
    validate_filled, FindingSeverity, JsonPath, PathSeg, Provenance, SpecIrDocument, SpecIrTemplate,
    ANCHOR_PREFIX,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecParsingOptions {
    /// Datasheets longer than this many characters are sent in chunks.
    pub char_budget: usize,
}

impl Default for SpecParsingOptions {
    fn default() -> Self {
        Self {
            char_budget: DEFAULT_CHAR_BUDGET,
        }
    }
}

/// Fills the template from the datasheet. Long datasheets go out one chunk
/// per request; a chunk's values only land in anchors no earlier chunk
/// filled, and anchors nobody filled end up as `"null"`.
pub fn run_spec_parsing(
    ds: &Datasheet,
    tpl: &SpecIrTemplate,
    gw: &mut Gateway,
    cfg: &AgentConfig,
    opts: SpecParsingOptions,
) -> Result<AgentRun<SpecIrDocument>, AgentError> {
    let text = ds.text();
    if text.chars().count() <= opts.char_budget {
        return parse_one(&text, tpl, gw, cfg, false).map(|run| AgentRun {
            value: into_document(tpl, run.value),
            attempts: run.attempts,
            digests: run.digests,
        });
    }

    let chunks = chunk(ds, opts.char_budget).map_err(|e| AgentError::Context(e.to_string()))?;
    log::info!("datasheet split into {} chunks", chunks.len());
    let slots: Vec<JsonPath> = tpl.anchors.iter().map(fill_slot).collect();
    let mut merged = tpl.root.clone();
    let mut attempts = 0;
    let mut digests = Vec::new();
    for c in &chunks {
        let run = parse_one(&c.text, tpl, gw, cfg, true)?;
        attempts += run.attempts;
        digests.extend(run.digests);
        for slot in &slots {
            let open = slot.lookup(&merged).is_some_and(is_open);
            let Some(new) = slot.lookup(&run.value).filter(|v| !is_open(v)) else {
                continue;
            };
            if open {
                *slot.lookup_mut(&mut merged).expect("slot exists in template") = new.clone();
            }
        }
    }
    for slot in &slots {
        let v = slot.lookup_mut(&mut merged).expect("slot exists in template");
        if contains_marker(v) {
            *v = Value::String("null".into());
        }
    }
    let report = validate_filled(tpl, &merged.to_string());
    if !report.is_valid() {
        return Err(AgentError::ContractViolation {
            kind: AgentKind::SpecParsing,
            attempts,
            findings: report.findings.iter().map(ToString::to_string).collect(),
            report: Some(report),
        });
    }
    Ok(AgentRun {
        value: into_document(tpl, merged),
        attempts,
        digests,
    })
}

fn parse_one(
    datasheet: &str,
    tpl: &SpecIrTemplate,
    gw: &mut Gateway,
    cfg: &AgentConfig,
    partial_ok: bool,
) -> Result<AgentRun<Value>, AgentError> {
    let inputs = PromptInputs {
        template: Some(tpl),
        datasheet: Some(datasheet),
        ..Default::default()
    };
    let bundle = build_prompt(AgentKind::SpecParsing, &inputs)?;
    call_with_retries(gw, AgentKind::SpecParsing, cfg, &bundle, |text| {
        let value = match sanitize_structured(text) {
            Ok(v) => v,
            Err(e) => {
                return Check::Reject {
                    findings: vec![format!("[grammar] $: {e}")],
                    report: None,
                }
            }
        };
        let report = validate_filled(tpl, &value.to_string());
        let blocking = report
            .findings
            .iter()
            .any(|f| !(partial_ok && f.severity == FindingSeverity::Unfilled));
        if blocking {
            Check::Reject {
                findings: report.findings.iter().map(ToString::to_string).collect(),
                report: Some(report),
            }
        } else {
            Check::Accept(value)
        }
    })
}

fn into_document(tpl: &SpecIrTemplate, root: Value) -> SpecIrDocument {
    SpecIrDocument {
        template_id: tpl.template_id.clone(),
        domain: tpl.domain,
        root,
        provenance: Provenance::Agent,
        anchors: tpl.anchors.clone(),
    }
}

/// The value an anchor's filler replaces: the whole array for list fills.
fn fill_slot(a: &crate::spec_ir::FillAnchor) -> JsonPath {
    let mut p = a.path.clone();
    if a.list_fill && matches!(p.0.last(), Some(PathSeg::Index(_))) {
        p.0.pop();
    }
    p
}

fn is_open(v: &Value) -> bool {
    v.as_str() == Some("null") || contains_marker(v)
}

fn contains_marker(v: &Value) -> bool {
    match v {
        Value::String(s) => s.contains(ANCHOR_PREFIX),
        Value::Array(items) => items.iter().any(contains_marker),
        Value::Object(map) => map.values().any(contains_marker),
        _ => false,
    }
}
