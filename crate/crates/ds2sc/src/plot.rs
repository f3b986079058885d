//! Plot-ready data files built from a run's simulation log.

use thiserror::Error;

use ds2sc_core::oracles::{fit_smoothness, rapp_pout_dbm, RappParams};
use ds2sc_core::scenario::{Expectation, Stimulus};
use ds2sc_core::verdicts::CsvLog;
use ds2sc_core::TestScenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Figure {
    /// Input, output and enable against time.
    LaWaveforms,
    /// Reference and simulated output power against input power.
    PaCurve,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlotError {
    #[error("log has no column `{0}`")]
    MissingColumn(String),
    #[error("no {0} scenario in the Spec IR")]
    NoScenario(&'static str),
    #[error("{0}")]
    Oracle(String),
}

fn column(log: &CsvLog, name: &str) -> Result<Vec<f64>, PlotError> {
    log.column(name).ok_or_else(|| PlotError::MissingColumn(name.into()))
}

/// Renders the figure's CSV. `scenarios` supplies column names, enable
/// windows and PA model parameters.
pub fn emit_plot_data(figure: Figure, log: &CsvLog, scenarios: &[TestScenario]) -> Result<String, PlotError> {
    match figure {
        Figure::LaWaveforms => la_waveforms(log, scenarios),
        Figure::PaCurve => pa_curve(log, scenarios),
    }
}

fn la_waveforms(log: &CsvLog, scenarios: &[TestScenario]) -> Result<String, PlotError> {
    let la = scenarios.iter().find(|s| matches!(s.expected, Expectation::LaPhases { .. }));
    let (vin_name, vout_name) = match la.map(|s| &s.expected) {
        Some(Expectation::LaPhases { columns, .. }) => (columns.get("vin"), columns.get("vout")),
        _ => ("vin", "vout"),
    };
    let time: Vec<f64> = log.timestamps().collect();
    let vin = column(log, vin_name)?;
    let vout = column(log, vout_name)?;
    let logged_enable = ["enable", "en"].iter().find_map(|c| log.column(c));
    let enable: Vec<f64> = match (logged_enable, la.map(|s| &s.stimulus)) {
        (Some(e), _) => e,
        (None, Some(Stimulus::SineSegments { segments })) => time
            .iter()
            .map(|&t| {
                let on = segments.iter().find(|s| t >= s.start_ns && t < s.end_ns).is_some_and(|s| s.enable);
                if on { 1.0 } else { 0.0 }
            })
            .collect(),
        (None, _) => return Err(PlotError::MissingColumn("enable".into())),
    };
    let mut out = String::from("time_ns,vin,vout,enable\n");
    for i in 0..time.len() {
        out.push_str(&format!("{},{},{},{}\n", time[i], vin[i], vout[i], enable[i]));
    }
    Ok(out)
}

fn pa_curve(log: &CsvLog, scenarios: &[TestScenario]) -> Result<String, PlotError> {
    let Some(Expectation::PaCurve {
        g_db,
        psat_dbm,
        s,
        reference,
        columns,
        ..
    }) = scenarios
        .iter()
        .map(|s| &s.expected)
        .find(|e| matches!(e, Expectation::PaCurve { .. }))
    else {
        return Err(PlotError::NoScenario("pa_curve"));
    };
    let s = match s {
        Some(s) => *s,
        None => fit_smoothness(reference, *g_db, *psat_dbm).map_err(|e| PlotError::Oracle(e.to_string()))?,
    };
    let model = RappParams::new(*g_db, *psat_dbm, s);
    let pin = column(log, columns.get("pin"))?;
    let pout = column(log, columns.get("pout"))?;
    let mut out = String::from("pin_dbm,pout_ref_dbm,pout_sim_dbm,abs_error_db\n");
    for (p, sim) in pin.iter().zip(&pout) {
        let r = rapp_pout_dbm(*p, &model);
        out.push_str(&format!("{p},{r},{sim},{}\n", (r - sim).abs()));
    }
    Ok(out)
}
