//! Normalizes `test_cases.scenarios` into [`TestScenario`] values.
//!
//! Each entry is an object with `name`, `stimulus`, `expected`, an optional
//! `domain` (defaults to the document's), optional `params` and an optional
//! `columns` map from role to CSV column. Parameter values may be quantities
//! (`"400 mV"`) or `"@interface_params.v_out_max"` references into the
//! document, in which case the referenced anchor's hint supplies the default
//! unit.

use serde_json::{Map, Value};
use thiserror::Error;

use ds2sc_core::oracles::{ComplexSample, CurvePoint, LaParams};
use ds2sc_core::scenario::{ColumnMap, Expectation, FftCheck, ScenarioError, SineSegment, Stimulus};
use ds2sc_core::{Domain, TestScenario};

use super::{parse_quantity, Dimension, SpecIrDocument};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioParseError {
    #[error("document has no `test_cases.scenarios` array")]
    MissingZone,
    #[error("scenario `{scenario}`: `{field}` has no tolerance")]
    MissingTolerance { scenario: String, field: String },
    #[error("scenario `{scenario}`: {message}")]
    Malformed { scenario: String, message: String },
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
}

pub fn test_scenarios(doc: &SpecIrDocument) -> Result<Vec<TestScenario>, ScenarioParseError> {
    let list = doc
        .root
        .pointer("/test_cases/scenarios")
        .and_then(Value::as_array)
        .ok_or(ScenarioParseError::MissingZone)?;
    list.iter()
        .enumerate()
        .map(|(i, entry)| {
            let s = ScenarioReader::new(doc, entry, i)?.read()?;
            s.validate()?;
            Ok(s)
        })
        .collect()
}

struct ScenarioReader<'a> {
    doc: &'a SpecIrDocument,
    name: String,
    obj: &'a Map<String, Value>,
}

impl<'a> ScenarioReader<'a> {
    fn new(doc: &'a SpecIrDocument, entry: &'a Value, index: usize) -> Result<Self, ScenarioParseError> {
        let fallback = format!("#{index}");
        let obj = entry.as_object().ok_or_else(|| ScenarioParseError::Malformed {
            scenario: fallback.clone(),
            message: "entry is not an object".into(),
        })?;
        let name = obj.get("name").and_then(Value::as_str).map(str::to_string).unwrap_or(fallback);
        Ok(Self { doc, name, obj })
    }

    fn err(&self, message: impl Into<String>) -> ScenarioParseError {
        ScenarioParseError::Malformed {
            scenario: self.name.clone(),
            message: message.into(),
        }
    }

    fn object(&self, v: Option<&'a Value>, what: &str) -> Result<&'a Map<String, Value>, ScenarioParseError> {
        v.and_then(Value::as_object).ok_or_else(|| self.err(format!("`{what}` must be an object")))
    }

    fn kind(&self, obj: &'a Map<String, Value>, what: &str) -> Result<&'a str, ScenarioParseError> {
        obj.get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| self.err(format!("`{what}.kind` missing")))
    }

    /// Dereferences `@path` values; other values pass through with no unit hint.
    fn deref(&self, v: &'a Value) -> Result<(&'a Value, Option<&'a str>), ScenarioParseError> {
        let Some(reference) = v.as_str().and_then(|s| s.strip_prefix('@')) else {
            return Ok((v, None));
        };
        let (target, path) = self
            .doc
            .resolve(reference)
            .ok_or_else(|| self.err(format!("reference `@{reference}` does not resolve")))?;
        if target.as_str() == Some("null") {
            return Err(self.err(format!("reference `@{reference}` is absent (\"null\") in the document")));
        }
        let unit = self.doc.anchor_at(&path).and_then(|a| a.unit());
        Ok((target, unit))
    }

    fn quantity(&self, obj: &'a Map<String, Value>, key: &str, dim: Dimension) -> Result<f64, ScenarioParseError> {
        let raw = obj.get(key).ok_or_else(|| self.err(format!("`{key}` missing")))?;
        let (v, unit) = self.deref(raw)?;
        parse_quantity(v, dim, unit).map_err(|e| self.err(format!("`{key}`: {e}")))
    }

    fn opt_quantity(&self, obj: &'a Map<String, Value>, key: &str, dim: Dimension) -> Result<Option<f64>, ScenarioParseError> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(_) => self.quantity(obj, key, dim).map(Some),
        }
    }

    fn tolerance(&self, obj: &'a Map<String, Value>, field: &str, dim: Dimension) -> Result<f64, ScenarioParseError> {
        if !obj.contains_key("tolerance") {
            return Err(ScenarioParseError::MissingTolerance {
                scenario: self.name.clone(),
                field: field.to_string(),
            });
        }
        self.quantity(obj, "tolerance", dim)
    }

    fn columns(&self, defaults: &[(&str, &str)]) -> Result<ColumnMap, ScenarioParseError> {
        let mut map = ColumnMap::new(defaults);
        if let Some(v) = self.obj.get("columns") {
            for (role, col) in self.object(Some(v), "columns")? {
                let col = col.as_str().ok_or_else(|| self.err(format!("column for `{role}` must be a string")))?;
                map.set(role, col);
            }
        }
        Ok(map)
    }

    fn read(&self) -> Result<TestScenario, ScenarioParseError> {
        let domain = match self.obj.get("domain") {
            None => self.doc.domain,
            Some(v) => v
                .as_str()
                .and_then(Domain::parse)
                .ok_or_else(|| self.err("`domain` must be digital, analog or rf"))?,
        };
        let empty = Map::new();
        let params = match self.obj.get("params") {
            Some(v) => self.object(Some(v), "params")?,
            None => &empty,
        };
        let stimulus = self.object(self.obj.get("stimulus"), "stimulus")?;
        let expected = self.object(self.obj.get("expected"), "expected")?;
        let (stimulus, expected) = match domain {
            Domain::Digital => self.digital(stimulus, expected)?,
            Domain::Analog => self.analog(params, stimulus, expected)?,
            Domain::Rf => self.rf(params, stimulus, expected)?,
        };
        Ok(TestScenario {
            name: self.name.clone(),
            domain,
            stimulus,
            expected,
        })
    }

    fn digital(
        &self,
        stimulus: &'a Map<String, Value>,
        expected: &'a Map<String, Value>,
    ) -> Result<(Stimulus, Expectation), ScenarioParseError> {
        if self.kind(stimulus, "stimulus")? != "sequence" {
            return Err(self.err("digital stimulus must be of kind `sequence`"));
        }
        let raw = stimulus
            .get("samples")
            .and_then(Value::as_array)
            .ok_or_else(|| self.err("`stimulus.samples` must be an array"))?;
        let samples = raw
            .iter()
            .map(|v| self.complex(v))
            .collect::<Result<Vec<_>, _>>()?;
        let check = match self.kind(expected, "expected")? {
            "fft_roundtrip" => FftCheck::Roundtrip,
            "fft_forward" => FftCheck::Forward,
            other => return Err(self.err(format!("unknown digital expectation `{other}`"))),
        };
        let tolerance = self.tolerance(expected, "expected", Dimension::Ratio)?;
        Ok((
            Stimulus::Sequence { samples },
            Expectation::Fft {
                check,
                tolerance,
                columns: self.columns(&[("re", "out_re"), ("im", "out_im")])?,
            },
        ))
    }

    fn complex(&self, v: &Value) -> Result<ComplexSample, ScenarioParseError> {
        let num = |x: &Value| x.as_f64().ok_or_else(|| self.err(format!("sample `{v}` is not numeric")));
        match v {
            Value::Number(_) => Ok(ComplexSample::real(num(v)?)),
            Value::Array(pair) if pair.len() == 2 => Ok(ComplexSample::new(num(&pair[0])?, num(&pair[1])?)),
            Value::Object(o) => Ok(ComplexSample::new(
                num(o.get("re").unwrap_or(&Value::Null))?,
                o.get("im").map(num).transpose()?.unwrap_or(0.0),
            )),
            _ => Err(self.err(format!("sample `{v}` must be a number, [re, im] or {{re, im}}"))),
        }
    }

    fn analog(
        &self,
        params: &'a Map<String, Value>,
        stimulus: &'a Map<String, Value>,
        expected: &'a Map<String, Value>,
    ) -> Result<(Stimulus, Expectation), ScenarioParseError> {
        if self.kind(stimulus, "stimulus")? != "sine_segments" {
            return Err(self.err("analog stimulus must be of kind `sine_segments`"));
        }
        if self.kind(expected, "expected")? != "la_phases" {
            return Err(self.err("analog expectation must be of kind `la_phases`"));
        }
        let la = LaParams {
            gain: self.quantity(params, "gain", Dimension::Ratio)?,
            v_out_max: self.quantity(params, "v_out_max", Dimension::Voltage)?,
            v_out_min: self.quantity(params, "v_out_min", Dimension::Voltage)?,
            quiescent: self.opt_quantity(params, "quiescent", Dimension::Voltage)?.unwrap_or(0.0),
            enabled: true,
        };
        la.validate().map_err(|e| self.err(format!("limiting-amplifier params: {e}")))?;
        let raw = stimulus
            .get("segments")
            .and_then(Value::as_array)
            .ok_or_else(|| self.err("`stimulus.segments` must be an array"))?;
        let mut segments = Vec::with_capacity(raw.len());
        for (i, seg) in raw.iter().enumerate() {
            let o = self.object(Some(seg), "segment")?;
            let name = o
                .get("name")
                .and_then(Value::as_str)
                .map(str::to_string)
                .unwrap_or_else(|| format!("segment{i}"));
            segments.push(SineSegment {
                start_ns: self.quantity(o, "start", Dimension::Time)?,
                end_ns: self.quantity(o, "end", Dimension::Time)?,
                amplitude_v: self.quantity(o, "amplitude", Dimension::Voltage)?,
                frequency_hz: self.opt_quantity(o, "frequency", Dimension::Frequency)?.unwrap_or(0.0),
                enable: o.get("enable").map(|v| v.as_bool()).unwrap_or(Some(true)).ok_or_else(|| self.err("`enable` must be a boolean"))?,
                tolerance_v: self.tolerance(o, &format!("segments[{i}]"), Dimension::Voltage)?,
                name,
            });
        }
        Ok((
            Stimulus::SineSegments { segments },
            Expectation::LaPhases {
                params: la,
                columns: self.columns(&[("vin", "vin"), ("vout", "vout")])?,
            },
        ))
    }

    fn rf(
        &self,
        params: &'a Map<String, Value>,
        stimulus: &'a Map<String, Value>,
        expected: &'a Map<String, Value>,
    ) -> Result<(Stimulus, Expectation), ScenarioParseError> {
        if self.kind(stimulus, "stimulus")? != "power_sweep" {
            return Err(self.err("rf stimulus must be of kind `power_sweep`"));
        }
        if self.kind(expected, "expected")? != "pa_curve" {
            return Err(self.err("rf expectation must be of kind `pa_curve`"));
        }
        let raw = expected
            .get("reference")
            .and_then(Value::as_array)
            .ok_or_else(|| self.err("`expected.reference` must be an array of points"))?;
        let mut reference = Vec::with_capacity(raw.len());
        for p in raw {
            let (pin, pout) = match p {
                Value::Array(pair) if pair.len() == 2 => (&pair[0], &pair[1]),
                Value::Object(o) => (
                    o.get("pin_dbm").unwrap_or(&Value::Null),
                    o.get("pout_dbm").unwrap_or(&Value::Null),
                ),
                _ => return Err(self.err(format!("reference point `{p}` must be [pin, pout]"))),
            };
            let dbm = |v: &Value| parse_quantity(v, Dimension::Power, None).map_err(|e| self.err(format!("reference point `{p}`: {e}")));
            reference.push(CurvePoint::new(dbm(pin)?, dbm(pout)?));
        }
        Ok((
            Stimulus::PowerSweep {
                start_dbm: self.quantity(stimulus, "start", Dimension::Power)?,
                stop_dbm: self.quantity(stimulus, "stop", Dimension::Power)?,
                step_db: self.quantity(stimulus, "step", Dimension::Decibel)?,
            },
            Expectation::PaCurve {
                g_db: self.quantity(params, "g_db", Dimension::Decibel)?,
                psat_dbm: self.quantity(params, "psat_dbm", Dimension::Power)?,
                s: self.opt_quantity(params, "s", Dimension::Ratio)?,
                reference,
                tolerance_db: self.tolerance(expected, "expected", Dimension::Decibel)?,
                columns: self.columns(&[("pin", "pin_dbm"), ("pout", "pout_dbm")])?,
            },
        ))
    }
}
