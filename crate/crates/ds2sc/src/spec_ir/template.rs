use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use ds2sc_core::Domain;

use super::{JsonPath, SpecIrError};

pub const ANCHOR_PREFIX: &str = "<FILL:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneKind {
    Prefilled,
    Extraction,
}

impl ZoneKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "prefilled" => Some(ZoneKind::Prefilled),
            "extraction" => Some(ZoneKind::Extraction),
            _ => None,
        }
    }
}

/// The four reserved top-level zones, in template order.
pub const ZONES: [(&str, ZoneKind); 4] = [
    ("global_config", ZoneKind::Prefilled),
    ("interface_params", ZoneKind::Extraction),
    ("behavioral_logic", ZoneKind::Extraction),
    ("test_cases", ZoneKind::Prefilled),
];

const HINTS_KEY: &str = "_hints";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillAnchor {
    pub path: JsonPath,
    pub name: String,
    pub hint: Option<String>,
    /// The anchor is the sole element of an array whose length the filler chooses.
    pub list_fill: bool,
}

impl FillAnchor {
    /// Unit declared in the hint as `unit: <u>`.
    pub fn unit(&self) -> Option<&str> {
        let hint = self.hint.as_deref()?;
        let idx = hint.find("unit:")?;
        hint[idx + 5..].split([',', ';', ')']).next().map(str::trim).filter(|u| !u.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecIrTemplate {
    pub template_id: String,
    pub domain: Domain,
    pub root: Value,
    pub anchors: Vec<FillAnchor>,
}

/// Anchor name when `s` is exactly `<FILL:name>` with a legal name.
pub fn is_anchor(s: &str) -> Option<&str> {
    let name = s.strip_prefix(ANCHOR_PREFIX)?.strip_suffix('>')?;
    let legal = !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'));
    legal.then_some(name)
}

pub fn parse_template(text: &str) -> Result<SpecIrTemplate, SpecIrError> {
    let root: Value = serde_json::from_str(text).map_err(|e| SpecIrError::syntax(&e))?;
    let obj = root
        .as_object()
        .ok_or_else(|| SpecIrError::Structure("top level must be an object".into()))?;

    for key in obj.keys() {
        if !ZONES.iter().any(|(z, _)| z == key) {
            return Err(SpecIrError::Structure(format!("unexpected top-level key `{key}`")));
        }
    }

    let mut anchors = Vec::new();
    for (zone, expected_kind) in ZONES {
        let body = obj
            .get(zone)
            .and_then(Value::as_object)
            .ok_or_else(|| SpecIrError::Structure(format!("missing zone object `{zone}`")))?;
        let zone_err = |message: String| SpecIrError::Zone {
            zone: zone.to_string(),
            message,
        };
        let kind = body
            .get("zone_kind")
            .and_then(Value::as_str)
            .and_then(ZoneKind::parse)
            .ok_or_else(|| zone_err("missing or invalid `zone_kind` marker".into()))?;
        if kind != expected_kind {
            return Err(zone_err(format!("must be marked {expected_kind:?}, found {kind:?}")));
        }

        let mut zone_anchors = Vec::new();
        collect_anchors(&root[zone], &JsonPath::root().key(zone), &mut zone_anchors)?;
        match kind {
            ZoneKind::Prefilled if !zone_anchors.is_empty() => {
                return Err(zone_err(format!(
                    "pre-filled zone contains anchor `{}` at {}",
                    zone_anchors[0].name, zone_anchors[0].path
                )));
            }
            ZoneKind::Extraction if zone_anchors.is_empty() => {
                return Err(zone_err("extraction zone has no anchors".into()));
            }
            _ => {}
        }
        let hints = body.get(HINTS_KEY).and_then(Value::as_object);
        for a in &mut zone_anchors {
            a.hint = hints
                .and_then(|h| h.get(&a.name))
                .and_then(Value::as_str)
                .map(str::to_string);
        }
        anchors.extend(zone_anchors);
    }

    let global = &root["global_config"];
    let domain = global
        .get("domain")
        .and_then(Value::as_str)
        .and_then(Domain::parse)
        .ok_or_else(|| {
            SpecIrError::Structure("global_config.domain must be digital, analog or rf".into())
        })?;
    let template_id = match global.get("template_id").and_then(Value::as_str) {
        Some(id) => id.to_string(),
        None => {
            let canonical = serde_json::to_string(&root).expect("JSON values serialize");
            let digest = Sha256::digest(canonical.as_bytes());
            format!("sha256:{}", &hex::encode(digest)[..16])
        }
    };

    Ok(SpecIrTemplate {
        template_id,
        domain,
        root,
        anchors,
    })
}

fn collect_anchors(v: &Value, path: &JsonPath, out: &mut Vec<FillAnchor>) -> Result<(), SpecIrError> {
    match v {
        Value::String(s) if s.contains(ANCHOR_PREFIX) => {
            let name = is_anchor(s).ok_or_else(|| SpecIrError::AnchorGrammar {
                path: path.to_string(),
                value: s.clone(),
            })?;
            out.push(FillAnchor {
                path: path.clone(),
                name: name.to_string(),
                hint: None,
                list_fill: false,
            });
        }
        Value::Array(items) => {
            let list_fill = items.len() == 1 && items[0].as_str().and_then(is_anchor).is_some();
            for (i, item) in items.iter().enumerate() {
                collect_anchors(item, &path.index(i), out)?;
            }
            if list_fill {
                if let Some(last) = out.last_mut() {
                    last.list_fill = true;
                }
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                collect_anchors(item, &path.key(k), out)?;
            }
        }
        _ => {}
    }
    Ok(())
}

impl SpecIrTemplate {
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.root).expect("JSON values serialize");
        s.push('\n');
        s
    }

    pub fn zone_of(&self, path: &JsonPath) -> Option<ZoneKind> {
        let top = path.top_key()?;
        ZONES.iter().find(|(z, _)| *z == top).map(|(_, k)| *k)
    }

    pub fn anchor_at(&self, path: &JsonPath) -> Option<&FillAnchor> {
        self.anchors.iter().find(|a| &a.path == path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    pub(crate) fn minimal(extraction: Value) -> String {
        json!({
            "global_config": {"zone_kind": "prefilled", "domain": "analog", "gain": 10},
            "interface_params": extraction,
            "behavioral_logic": {"zone_kind": "extraction", "transfer": "<FILL:transfer>"},
            "test_cases": {"zone_kind": "prefilled", "scenarios": []}
        })
        .to_string()
    }

    #[test]
    fn single_anchor() {
        let t = parse_template(&minimal(json!({"zone_kind": "extraction", "gain_db": "<FILL:gain_db>"}))).unwrap();
        assert_eq!(t.anchors.len(), 2);
        assert_eq!(t.anchors[0].name, "gain_db");
        assert_eq!(t.anchors[0].path.to_string(), "interface_params.gain_db");
        assert_eq!(t.domain, Domain::Analog);
        assert!(t.template_id.starts_with("sha256:"));
    }

    #[test]
    fn anchors_keep_document_order() {
        let t = parse_template(&minimal(json!({
            "zone_kind": "extraction",
            "zeta": "<FILL:z>",
            "alpha": {"pins": ["<FILL:pin>"], "width": "<FILL:w>"}
        })))
        .unwrap();
        let names: Vec<_> = t.anchors.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["z", "pin", "w", "transfer"]);
        assert!(t.anchors[1].list_fill);
        assert!(!t.anchors[2].list_fill);
    }

    #[test]
    fn prefilled_zone_with_anchor_is_rejected() {
        let text = json!({
            "global_config": {"zone_kind": "prefilled", "domain": "rf", "x": "<FILL:x>"},
            "interface_params": {"zone_kind": "extraction", "a": "<FILL:a>"},
            "behavioral_logic": {"zone_kind": "extraction", "b": "<FILL:b>"},
            "test_cases": {"zone_kind": "prefilled"}
        })
        .to_string();
        assert!(matches!(parse_template(&text), Err(SpecIrError::Zone { zone, .. }) if zone == "global_config"));
    }

    #[test]
    fn malformed_anchor_and_syntax() {
        let bad = minimal(json!({"zone_kind": "extraction", "g": "<FILL:gain db>"}));
        assert!(matches!(parse_template(&bad), Err(SpecIrError::AnchorGrammar { path, .. }) if path == "interface_params.g"));
        let embedded = minimal(json!({"zone_kind": "extraction", "g": "about <FILL:g>"}));
        assert!(matches!(parse_template(&embedded), Err(SpecIrError::AnchorGrammar { .. })));
        assert!(matches!(parse_template("{\"a\": 1,,}"), Err(SpecIrError::Syntax { line: 1, .. })));
    }

    #[test]
    fn zone_structure_errors() {
        assert!(matches!(
            parse_template(&minimal(json!({"zone_kind": "extraction"}))),
            Err(SpecIrError::Zone { .. })
        ));
        assert!(matches!(
            parse_template(&minimal(json!({"zone_kind": "prefilled", "a": 1}))),
            Err(SpecIrError::Zone { .. })
        ));
        assert!(matches!(parse_template("{}"), Err(SpecIrError::Structure(_))));
        let mut extra: Value = serde_json::from_str(&minimal(json!({"zone_kind": "extraction", "a": "<FILL:a>"}))).unwrap();
        extra["notes"] = json!("x");
        assert!(matches!(parse_template(&extra.to_string()), Err(SpecIrError::Structure(_))));
    }

    #[test]
    fn hints_and_units() {
        let t = parse_template(&minimal(json!({
            "zone_kind": "extraction",
            "_hints": {"vmax": "Max output swing (unit: mV)"},
            "vmax": "<FILL:vmax>"
        })))
        .unwrap();
        assert_eq!(t.anchors[0].hint.as_deref(), Some("Max output swing (unit: mV)"));
        assert_eq!(t.anchors[0].unit(), Some("mV"));
        assert_eq!(t.anchors[1].unit(), None);
    }

    #[test]
    fn anchor_grammar() {
        assert_eq!(is_anchor("<FILL:a.b-c_9>"), Some("a.b-c_9"));
        assert_eq!(is_anchor("<FILL:>"), None);
        assert_eq!(is_anchor("<FILL:a b>"), None);
        assert_eq!(is_anchor(" <FILL:a>"), None);
    }
}
