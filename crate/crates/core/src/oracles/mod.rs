//! Independent numeric references for the digital, analog and RF case studies.
//!
//! Everything here is a pure function of its inputs. The implementations favour
//! directness over speed: the DFT is the O(N²) sum, the amplifier models are
//! closed-form, and the smoothness fit is a grid scan refined by golden-section
//! search.

mod curve;
mod dft;
mod fit;
mod la;
mod rapp;

pub use curve::{curve_max_error_db, CurvePoint};
pub use dft::{dft, roundtrip_error, ComplexSample};
pub use fit::{fit_smoothness, golden_section_min, GoldenResult};
pub use la::{la_transfer, LaParams};
pub use rapp::{compression_point_1db, db_to_linear, linear_to_db, rapp_pout_dbm, RappParams};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("input is empty")]
    Empty,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("curve points must be sorted by input power (violated at index {0})")]
    Unsorted(usize),
    #[error("reference curve covers [{have_lo}, {have_hi}] dBm but [{need_lo}, {need_hi}] dBm is required")]
    Coverage {
        need_lo: f64,
        need_hi: f64,
        have_lo: f64,
        have_hi: f64,
    },
    #[error("ill-conditioned fit: largest observed compression is {max_compression_db} dB (need at least 0.5 dB)")]
    IllConditioned { max_compression_db: f64 },
}
