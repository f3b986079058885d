use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::CsvLog;
use crate::oracles::{
    curve_max_error_db, dft, fit_smoothness, la_transfer, rapp_pout_dbm, CurvePoint, OracleError,
    RappParams,
};
use crate::scenario::{
    ColumnMap, Expectation, FftCheck, ScenarioError, SineSegment, Stimulus, TestScenario,
};

/// One oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    fn within(name: String, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            passed: libm::fabs(measured - expected) <= tolerance,
            name,
            measured,
            expected,
            tolerance,
        }
    }

    fn strictly_below(name: String, measured: f64, tolerance: f64) -> Self {
        Self {
            passed: measured < tolerance,
            name,
            measured,
            expected: 0.0,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrossCheckError {
    #[error("log has no column `{0}`")]
    MissingColumn(String),
    #[error("window `{window}` [{start_ns}, {end_ns}) ns lies outside the logged time range")]
    WindowOutOfRange {
        window: String,
        start_ns: f64,
        end_ns: f64,
    },
    #[error("window `{window}` lasts {duration_ns} ns, shorter than one stimulus period ({period_ns} ns)")]
    WindowTooShort {
        window: String,
        duration_ns: f64,
        period_ns: f64,
    },
    #[error("expected at least {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
}

fn column(log: &CsvLog, columns: &ColumnMap, role: &str) -> Result<Vec<f64>, CrossCheckError> {
    let name = columns.get(role);
    log.column(name)
        .ok_or_else(|| CrossCheckError::MissingColumn(name.to_string()))
}

/// Re-derives a scenario's expectations from the oracles and compares them
/// with a simulation log, independently of the testbench's own report.
pub fn cross_check(log: &CsvLog, scenario: &TestScenario) -> Result<Vec<CheckOutcome>, CrossCheckError> {
    scenario.validate()?;
    match (&scenario.stimulus, &scenario.expected) {
        (
            Stimulus::Sequence { samples },
            Expectation::Fft {
                check,
                tolerance,
                columns,
            },
        ) => check_fft(log, samples, *check, *tolerance, columns),
        (Stimulus::SineSegments { segments }, Expectation::LaPhases { params, columns }) => {
            check_la(log, segments, params, columns)
        }
        (
            Stimulus::PowerSweep { .. },
            Expectation::PaCurve {
                g_db,
                psat_dbm,
                s,
                reference,
                tolerance_db,
                columns,
            },
        ) => {
            let s = match s {
                Some(s) => *s,
                None => fit_smoothness(reference, *g_db, *psat_dbm)?,
            };
            check_pa(log, &RappParams::new(*g_db, *psat_dbm, s), reference, *tolerance_db, columns)
        }
        // validate() rejects mismatched pairs
        _ => unreachable!("scenario validated"),
    }
}

fn check_fft(
    log: &CsvLog,
    input: &[crate::oracles::ComplexSample],
    check: FftCheck,
    tolerance: f64,
    columns: &ColumnMap,
) -> Result<Vec<CheckOutcome>, CrossCheckError> {
    let spectrum = dft(input, false)?;
    let expected = match check {
        FftCheck::Forward => spectrum,
        FftCheck::Roundtrip => dft(&spectrum, true)?,
    };
    let re = column(log, columns, "re")?;
    let im = column(log, columns, "im")?;
    let n = expected.len();
    if re.len() < n {
        return Err(CrossCheckError::RowCount {
            expected: n,
            found: re.len(),
        });
    }
    // The final N rows hold the result; earlier rows may log intermediate phases.
    let offset = re.len() - n;
    let mut out = Vec::with_capacity(2 * n);
    for (i, want) in expected.iter().enumerate() {
        out.push(CheckOutcome::within(format!("out[{i}].re"), re[offset + i], want.re, tolerance));
        out.push(CheckOutcome::within(format!("out[{i}].im"), im[offset + i], want.im, tolerance));
    }
    Ok(out)
}

fn half_span(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    (hi - lo) / 2.0
}

fn check_la(
    log: &CsvLog,
    segments: &[SineSegment],
    params: &crate::oracles::LaParams,
    columns: &ColumnMap,
) -> Result<Vec<CheckOutcome>, CrossCheckError> {
    let time = match columns.entries.iter().any(|(r, _)| r == "time") {
        true => column(log, columns, "time")?,
        false => log.timestamps().collect(),
    };
    let vin = column(log, columns, "vin")?;
    let vout = column(log, columns, "vout")?;
    let first = time[0];
    let last = time[time.len() - 1];
    let max_step = time
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);

    let mut out = Vec::new();
    for seg in segments {
        if let Some(period_ns) = seg.period_ns() {
            if seg.duration_ns() < period_ns {
                return Err(CrossCheckError::WindowTooShort {
                    window: seg.name.clone(),
                    duration_ns: seg.duration_ns(),
                    period_ns,
                });
            }
        }
        let rows: Vec<usize> = (0..time.len())
            .filter(|&i| time[i] >= seg.start_ns && time[i] < seg.end_ns)
            .collect();
        if seg.start_ns < first || seg.end_ns > last + max_step || rows.len() < 2 {
            return Err(CrossCheckError::WindowOutOfRange {
                window: seg.name.clone(),
                start_ns: seg.start_ns,
                end_ns: seg.end_ns,
            });
        }
        let p = params.with_enabled(seg.enable);
        let oracle: Vec<f64> = rows.iter().map(|&i| la_transfer(vin[i], &p)).collect();
        let measured_amp = half_span(rows.iter().map(|&i| vout[i]));
        let expected_amp = half_span(oracle.iter().copied());
        out.push(CheckOutcome::within(
            format!("{}.amplitude", seg.name),
            measured_amp,
            expected_amp,
            seg.tolerance_v,
        ));
        let deviation = rows
            .iter()
            .zip(&oracle)
            .map(|(&i, want)| libm::fabs(vout[i] - want))
            .fold(0.0, f64::max);
        let label = if seg.enable { "tracking" } else { "quiescent" };
        out.push(CheckOutcome::within(
            format!("{}.{label}", seg.name),
            deviation,
            0.0,
            seg.tolerance_v,
        ));
    }
    Ok(out)
}

fn check_pa(
    log: &CsvLog,
    params: &RappParams,
    reference: &[CurvePoint],
    tolerance_db: f64,
    columns: &ColumnMap,
) -> Result<Vec<CheckOutcome>, CrossCheckError> {
    let pin = column(log, columns, "pin")?;
    let pout = column(log, columns, "pout")?;
    let mut sim: Vec<CurvePoint> = pin
        .iter()
        .zip(&pout)
        .map(|(&i, &o)| CurvePoint::new(i, o))
        .collect();
    sim.sort_by(|a, b| a.pin_dbm.total_cmp(&b.pin_dbm));

    let model_error = sim
        .iter()
        .map(|p| libm::fabs(p.pout_dbm - rapp_pout_dbm(p.pin_dbm, params)))
        .fold(0.0, f64::max);
    let mut out = alloc::vec![CheckOutcome::strictly_below(
        String::from("pa.vs_rapp"),
        model_error,
        tolerance_db,
    )];
    if !reference.is_empty() {
        let reference_error = curve_max_error_db(reference, &sim)?;
        out.push(CheckOutcome::strictly_below(
            String::from("pa.vs_reference"),
            reference_error,
            tolerance_db,
        ));
    }
    Ok(out)
}
