use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::template::{is_anchor, SpecIrTemplate, ANCHOR_PREFIX};
use super::JsonPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingSeverity {
    Tamper,
    Unfilled,
    Structural,
    Grammar,
}

impl FindingSeverity {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingSeverity::Tamper => "tamper",
            FindingSeverity::Unfilled => "unfilled",
            FindingSeverity::Structural => "structural",
            FindingSeverity::Grammar => "grammar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: FindingSeverity,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.severity.as_str(), self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationVerdict {
    Valid,
    Violations,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: ValidationVerdict,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    fn from_findings(findings: Vec<Finding>) -> Self {
        let verdict = if findings.is_empty() {
            ValidationVerdict::Valid
        } else {
            ValidationVerdict::Violations
        };
        Self { verdict, findings }
    }

    pub fn is_valid(&self) -> bool {
        self.verdict == ValidationVerdict::Valid
    }

    pub fn count(&self, severity: FindingSeverity) -> usize {
        self.findings.iter().filter(|f| f.severity == severity).count()
    }

    /// One finding per line, in discovery order.
    pub fn render(&self) -> String {
        self.findings.iter().map(|f| format!("{f}\n")).collect()
    }
}

/// Diffs a filled candidate against its template. Never fails: unreadable
/// input becomes a grammar finding.
pub fn validate_filled(template: &SpecIrTemplate, candidate_text: &str) -> ValidationReport {
    let mut findings = Vec::new();
    match serde_json::from_str::<Value>(candidate_text) {
        Ok(candidate) => diff(&template.root, &candidate, &JsonPath::root(), &mut findings),
        Err(e) => findings.push(Finding {
            severity: FindingSeverity::Grammar,
            path: "$".into(),
            message: format!("not well-formed JSON (line {}, column {}): {e}", e.line(), e.column()),
        }),
    }
    ValidationReport::from_findings(findings)
}

fn push(out: &mut Vec<Finding>, severity: FindingSeverity, path: &JsonPath, message: String) {
    out.push(Finding {
        severity,
        path: path.to_string(),
        message,
    });
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn same_leaf(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        _ => a == b,
    }
}

fn diff(tv: &Value, cv: &Value, path: &JsonPath, out: &mut Vec<Finding>) {
    if let Some(name) = tv.as_str().and_then(is_anchor) {
        check_fill(name, cv, path, out);
        return;
    }
    match (tv, cv) {
        (Value::Object(tm), Value::Object(cm)) => diff_object(tm, cm, path, out),
        (Value::Array(ta), _) if is_list_fill(ta) => {
            let name = ta[0].as_str().and_then(is_anchor).unwrap_or_default();
            match cv {
                Value::Array(items) => {
                    for (i, item) in items.iter().enumerate() {
                        check_fill(name, item, &path.index(i), out);
                    }
                }
                Value::String(s) if s == "null" => {}
                other => push(
                    out,
                    FindingSeverity::Structural,
                    path,
                    format!("list fill `{name}` expects an array or \"null\", found {}", type_name(other)),
                ),
            }
        }
        (Value::Array(ta), Value::Array(ca)) => {
            if ta.len() != ca.len() {
                push(
                    out,
                    FindingSeverity::Structural,
                    path,
                    format!("array length changed from {} to {}", ta.len(), ca.len()),
                );
            }
            for (i, (a, b)) in ta.iter().zip(ca).enumerate() {
                diff(a, b, &path.index(i), out);
            }
        }
        _ if std::mem::discriminant(tv) != std::mem::discriminant(cv) => push(
            out,
            FindingSeverity::Structural,
            path,
            format!("type changed from {} to {}", type_name(tv), type_name(cv)),
        ),
        _ if !same_leaf(tv, cv) => push(
            out,
            FindingSeverity::Tamper,
            path,
            format!("pre-filled value changed from {tv} to {cv}"),
        ),
        _ => {}
    }
}

fn is_list_fill(items: &[Value]) -> bool {
    items.len() == 1 && items[0].as_str().and_then(is_anchor).is_some()
}

fn diff_object(
    tm: &Map<String, Value>,
    cm: &Map<String, Value>,
    path: &JsonPath,
    out: &mut Vec<Finding>,
) {
    let missing: Vec<&String> = tm.keys().filter(|k| !cm.contains_key(*k)).collect();
    let added: Vec<&String> = cm.keys().filter(|k| !tm.contains_key(*k)).collect();
    let mut paired = BTreeSet::new();
    for (i, key) in missing.iter().enumerate() {
        match added.get(i) {
            Some(new) => {
                paired.insert(i);
                push(out, FindingSeverity::Tamper, &path.key(key), format!("key renamed to `{new}`"));
            }
            None => push(out, FindingSeverity::Tamper, &path.key(key), "key deleted".into()),
        }
    }
    for (i, key) in added.iter().enumerate() {
        if !paired.contains(&i) {
            push(out, FindingSeverity::Tamper, &path.key(key), "key added".into());
        }
    }
    for (k, tv) in tm {
        if let Some(cv) = cm.get(k) {
            diff(tv, cv, &path.key(k), out);
        }
    }
}

fn check_fill(name: &str, cv: &Value, path: &JsonPath, out: &mut Vec<Finding>) {
    match cv {
        Value::Null => push(
            out,
            FindingSeverity::Grammar,
            path,
            format!("anchor `{name}` filled with JSON null; use the string \"null\" for absent features"),
        ),
        Value::String(s) if s.contains(ANCHOR_PREFIX) => {
            push(out, FindingSeverity::Unfilled, path, format!("anchor `{name}` left unfilled"))
        }
        Value::Array(_) | Value::Object(_) => {
            if let Some(inner) = find_fill_marker(cv, path) {
                push(out, FindingSeverity::Unfilled, &inner, format!("anchor `{name}` still contains a fill marker"));
            }
        }
        _ => {}
    }
}

fn find_fill_marker(v: &Value, path: &JsonPath) -> Option<JsonPath> {
    match v {
        Value::String(s) if s.contains(ANCHOR_PREFIX) => Some(path.clone()),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .find_map(|(i, item)| find_fill_marker(item, &path.index(i))),
        Value::Object(map) => map.iter().find_map(|(k, item)| find_fill_marker(item, &path.key(k))),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_ir::parse_template;
    use serde_json::json;

    fn template() -> SpecIrTemplate {
        let text = json!({
            "global_config": {"zone_kind": "prefilled", "domain": "rf", "gain": 20, "name": "pa"},
            "interface_params": {
                "zone_kind": "extraction",
                "gain_db": "<FILL:gain_db>",
                "pins": ["<FILL:pins>"],
                "supply": {"vdd": "<FILL:vdd>", "nominal": 5.0}
            },
            "behavioral_logic": {"zone_kind": "extraction", "pseudocode": "<FILL:pseudocode>"},
            "test_cases": {"zone_kind": "prefilled", "scenarios": [1, 2, 3]}
        })
        .to_string();
        parse_template(&text).unwrap()
    }

    fn filled() -> Value {
        let mut v = template().root;
        v["interface_params"]["gain_db"] = json!("20");
        v["interface_params"]["pins"] = json!(["VIN", "VOUT", "EN"]);
        v["interface_params"]["supply"]["vdd"] = json!(3.3);
        v["behavioral_logic"]["pseudocode"] = json!("out = clamp(g * in)");
        v
    }

    #[test]
    fn happy_path_is_valid() {
        let r = validate_filled(&template(), &filled().to_string());
        assert!(r.is_valid(), "{}", r.render());
    }

    #[test]
    fn renamed_key_is_tamper() {
        let mut v = filled();
        let g = v["global_config"].as_object_mut().unwrap();
        let val = g.remove("gain").unwrap();
        g.insert("Gain".into(), val);
        let r = validate_filled(&template(), &v.to_string());
        assert_eq!(r.findings.len(), 1);
        assert_eq!(r.findings[0].severity, FindingSeverity::Tamper);
        assert_eq!(r.findings[0].path, "global_config.gain");
        assert!(r.findings[0].message.contains("`Gain`"));
    }

    #[test]
    fn unfilled_then_null() {
        let mut v = filled();
        v["interface_params"]["gain_db"] = json!("<FILL:gain_db>");
        let r = validate_filled(&template(), &v.to_string());
        assert_eq!(r.count(FindingSeverity::Unfilled), 1);
        assert!(!r.is_valid());
        v["interface_params"]["gain_db"] = json!("null");
        assert!(validate_filled(&template(), &v.to_string()).is_valid());
        v["interface_params"]["gain_db"] = Value::Null;
        let r = validate_filled(&template(), &v.to_string());
        assert_eq!(r.count(FindingSeverity::Grammar), 1);
        assert!(!r.is_valid());
    }

    #[test]
    fn template_itself_reports_only_unfilled() {
        let t = template();
        let r = validate_filled(&t, &t.to_json_pretty());
        assert_eq!(r.findings.len(), t.anchors.len());
        assert!(r.findings.iter().all(|f| f.severity == FindingSeverity::Unfilled));
    }

    #[test]
    fn leaf_and_structure_changes() {
        let t = template();
        let mut v = filled();
        v["global_config"]["gain"] = json!(21);
        v["interface_params"]["supply"]["nominal"] = json!("5.0");
        v["test_cases"]["scenarios"] = json!([1, 2]);
        let r = validate_filled(&t, &v.to_string());
        let sev: Vec<_> = r.findings.iter().map(|f| f.severity).collect();
        assert_eq!(
            sev,
            [FindingSeverity::Tamper, FindingSeverity::Structural, FindingSeverity::Structural]
        );
        let mut v = filled();
        v["global_config"]["gain"] = json!(20.0);
        assert!(validate_filled(&t, &v.to_string()).is_valid());
    }

    #[test]
    fn list_fill_rules() {
        let t = template();
        let mut v = filled();
        v["interface_params"]["pins"] = json!("null");
        assert!(validate_filled(&t, &v.to_string()).is_valid());
        v["interface_params"]["pins"] = json!([]);
        assert!(validate_filled(&t, &v.to_string()).is_valid());
        v["interface_params"]["pins"] = json!(["A", "<FILL:pins>"]);
        let r = validate_filled(&t, &v.to_string());
        assert_eq!(r.findings[0].path, "interface_params.pins[1]");
        v["interface_params"]["pins"] = json!(7);
        assert_eq!(validate_filled(&t, &v.to_string()).count(FindingSeverity::Structural), 1);
    }

    #[test]
    fn nested_fill_marker_in_object_fill() {
        let mut v = filled();
        v["behavioral_logic"]["pseudocode"] = json!({"steps": ["a", "<FILL:x>"]});
        let r = validate_filled(&template(), &v.to_string());
        assert_eq!(r.findings[0].path, "behavioral_logic.pseudocode.steps[1]");
    }

    #[test]
    fn unreadable_candidate_is_a_grammar_finding() {
        let r = validate_filled(&template(), "{\"global_config\": ");
        assert_eq!(r.findings.len(), 1);
        assert_eq!(r.findings[0].severity, FindingSeverity::Grammar);
        assert!(!r.is_valid());
    }
}
