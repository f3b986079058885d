//! The mixed-fill Spec IR: a JSON template combining hand-written constraints
//! with `<FILL:name>` extraction anchors, the anti-tamper validation of a
//! filled candidate, and the normalized test scenarios it carries.
//!
//! A template has exactly four top-level zones:
//!
//! | key                | `zone_kind`  |
//! |--------------------|--------------|
//! | `global_config`    | `prefilled`  |
//! | `interface_params` | `extraction` |
//! | `behavioral_logic` | `extraction` |
//! | `test_cases`       | `prefilled`  |
//!
//! `global_config.domain` selects `digital`, `analog` or `rf`. Extraction zones
//! may carry a `_hints` object mapping anchor names to free text; a hint of the
//! form `unit: mV` sets the unit of bare numbers filled into that anchor.

mod path;
mod quantity;
mod scenarios;
mod template;
mod validate;

pub use path::{JsonPath, PathSeg};
pub use quantity::{parse_quantity, Dimension, QuantityError};
pub use scenarios::{test_scenarios, ScenarioParseError};
pub use template::{
    is_anchor, parse_template, FillAnchor, SpecIrTemplate, ZoneKind, ANCHOR_PREFIX, ZONES,
};
pub use validate::{validate_filled, Finding, FindingSeverity, ValidationReport, ValidationVerdict};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use ds2sc_core::Domain;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecIrError {
    #[error("JSON syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: `{value}` contains `<FILL:` but is not a well-formed anchor")]
    AnchorGrammar { path: String, value: String },
    #[error("zone `{zone}`: {message}")]
    Zone { zone: String, message: String },
    #[error("template structure: {0}")]
    Structure(String),
}

impl SpecIrError {
    pub(crate) fn syntax(e: &serde_json::Error) -> Self {
        SpecIrError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Manual,
    Agent,
    Replay,
}

/// A filled Spec IR that passed [`validate_filled`] against its template.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecIrDocument {
    pub template_id: String,
    pub domain: Domain,
    pub root: Value,
    pub provenance: Provenance,
    pub anchors: Vec<FillAnchor>,
}

impl SpecIrDocument {
    /// Validates `candidate_text` against the template and wraps it.
    pub fn from_candidate(
        template: &SpecIrTemplate,
        candidate_text: &str,
        provenance: Provenance,
    ) -> Result<Self, ValidationReport> {
        let report = validate_filled(template, candidate_text);
        if !report.is_valid() {
            return Err(report);
        }
        let root = serde_json::from_str(candidate_text).expect("validated candidate parses");
        Ok(Self {
            template_id: template.template_id.clone(),
            domain: template.domain,
            root,
            provenance,
            anchors: template.anchors.clone(),
        })
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.root).expect("JSON values serialize");
        s.push('\n');
        s
    }

    pub fn anchor_at(&self, path: &JsonPath) -> Option<&FillAnchor> {
        self.anchors.iter().find(|a| &a.path == path)
    }

    /// Looks up a dotted reference such as `interface_params.v_out_max`.
    pub fn resolve(&self, reference: &str) -> Option<(&Value, JsonPath)> {
        let path = JsonPath::parse(reference)?;
        path.lookup(&self.root).map(|v| (v, path))
    }
}
