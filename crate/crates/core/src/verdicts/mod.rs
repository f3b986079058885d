//! Simulation evidence: CSV logs, verification reports, and independent
//! oracle cross-checks of a log against a scenario.

mod check;
mod csv;
mod report;

pub use check::{cross_check, CheckOutcome, CrossCheckError};
pub use csv::{parse_csv_log, CsvError, CsvLog};
pub use report::{parse_report, Report, ReportCheck, ReportError, Verdict};
