//! Normalized simulation test scenarios.
//!
//! These are the unit-normalized form of the scenarios pre-filled in a Spec IR
//! document: times in nanoseconds, voltages in volts, frequencies in hertz and
//! powers in dBm / dB.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracles::{ComplexSample, CurvePoint, LaParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Digital,
    Analog,
    Rf,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Digital => "digital",
            Domain::Analog => "analog",
            Domain::Rf => "rf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "digital" => Some(Domain::Digital),
            "analog" => Some(Domain::Analog),
            "rf" => Some(Domain::Rf),
            _ => None,
        }
    }
}

impl core::fmt::Display for Domain {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One time window of a piecewise sinusoidal stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineSegment {
    pub name: String,
    pub start_ns: f64,
    pub end_ns: f64,
    pub amplitude_v: f64,
    /// Zero means a DC (constant) input.
    pub frequency_hz: f64,
    pub enable: bool,
    /// Allowed deviation of the output from the oracle, volts.
    pub tolerance_v: f64,
}

impl SineSegment {
    pub fn duration_ns(&self) -> f64 {
        self.end_ns - self.start_ns
    }

    pub fn period_ns(&self) -> Option<f64> {
        (self.frequency_hz > 0.0).then(|| 1e9 / self.frequency_hz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stimulus {
    /// Complex input vector for a transform-style DUT.
    Sequence { samples: Vec<ComplexSample> },
    SineSegments { segments: Vec<SineSegment> },
    PowerSweep {
        start_dbm: f64,
        stop_dbm: f64,
        step_db: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FftCheck {
    /// Logged outputs should reproduce the input after forward + inverse.
    Roundtrip,
    /// Logged outputs should equal the forward spectrum.
    Forward,
}

/// Names of the CSV columns a cross-check reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub entries: Vec<(String, String)>,
}

impl ColumnMap {
    pub fn new(entries: &[(&str, &str)]) -> Self {
        Self {
            entries: entries
                .iter()
                .map(|(role, col)| (String::from(*role), String::from(*col)))
                .collect(),
        }
    }

    /// Column name for a role, falling back to the role name itself.
    pub fn get<'a>(&'a self, role: &'a str) -> &'a str {
        self.entries
            .iter()
            .find(|(r, _)| r == role)
            .map(|(_, c)| c.as_str())
            .unwrap_or(role)
    }

    pub fn set(&mut self, role: &str, column: &str) {
        match self.entries.iter_mut().find(|(r, _)| r == role) {
            Some(entry) => entry.1 = String::from(column),
            None => self.entries.push((String::from(role), String::from(column))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    Fft {
        check: FftCheck,
        tolerance: f64,
        columns: ColumnMap,
    },
    LaPhases {
        params: LaParams,
        columns: ColumnMap,
    },
    PaCurve {
        g_db: f64,
        psat_dbm: f64,
        /// Fitted from `reference` when absent.
        s: Option<f64>,
        reference: Vec<CurvePoint>,
        tolerance_db: f64,
        columns: ColumnMap,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestScenario {
    pub name: String,
    pub domain: Domain,
    pub stimulus: Stimulus,
    pub expected: Expectation,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario `{scenario}`: {message}")]
    Invalid { scenario: String, message: String },
}

impl TestScenario {
    fn invalid(&self, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Invalid {
            scenario: self.name.clone(),
            message: message.into(),
        }
    }

    /// Checks the structural invariants: tolerances present and positive,
    /// windows increasing and non-overlapping, stimulus matching the domain.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match (&self.stimulus, &self.expected) {
            (Stimulus::Sequence { samples }, Expectation::Fft { tolerance, .. }) => {
                if samples.is_empty() {
                    return Err(self.invalid("empty input sequence"));
                }
                if !samples.iter().all(ComplexSample::is_finite) {
                    return Err(self.invalid("non-finite input sample"));
                }
                if !positive(*tolerance) {
                    return Err(self.invalid("tolerance must be positive"));
                }
            }
            (Stimulus::SineSegments { segments }, Expectation::LaPhases { params, .. }) => {
                if segments.is_empty() {
                    return Err(self.invalid("no stimulus windows"));
                }
                params
                    .validate()
                    .map_err(|e| self.invalid(alloc::format!("{e}")))?;
                let mut prev_end = f64::NEG_INFINITY;
                for seg in segments {
                    if !(seg.start_ns.is_finite() && seg.end_ns > seg.start_ns) {
                        return Err(self.invalid(alloc::format!(
                            "window `{}` must have start < end",
                            seg.name
                        )));
                    }
                    if seg.start_ns < prev_end {
                        return Err(self.invalid(alloc::format!(
                            "window `{}` overlaps or precedes the previous window",
                            seg.name
                        )));
                    }
                    if !positive(seg.tolerance_v) {
                        return Err(self.invalid(alloc::format!(
                            "window `{}` needs a positive tolerance",
                            seg.name
                        )));
                    }
                    prev_end = seg.end_ns;
                }
            }
            (
                Stimulus::PowerSweep {
                    start_dbm,
                    stop_dbm,
                    step_db,
                },
                Expectation::PaCurve {
                    reference,
                    tolerance_db,
                    s,
                    ..
                },
            ) => {
                if !(stop_dbm > start_dbm && positive(*step_db)) {
                    return Err(self.invalid("sweep needs start < stop and a positive step"));
                }
                if !positive(*tolerance_db) {
                    return Err(self.invalid("tolerance must be positive"));
                }
                if s.is_none() && reference.len() < 2 {
                    return Err(self.invalid("need a smoothness factor or at least two reference points"));
                }
                if reference.windows(2).any(|w| w[1].pin_dbm < w[0].pin_dbm) {
                    return Err(self.invalid("reference points must be sorted by input power"));
                }
            }
            _ => return Err(self.invalid("stimulus kind does not match expectation kind")),
        }
        let expected_domain = match self.expected {
            Expectation::Fft { .. } => Domain::Digital,
            Expectation::LaPhases { .. } => Domain::Analog,
            Expectation::PaCurve { .. } => Domain::Rf,
        };
        if expected_domain != self.domain {
            return Err(self.invalid(alloc::format!(
                "expectation belongs to the {expected_domain} domain, scenario says {}",
                self.domain
            )));
        }
        Ok(())
    }
}
