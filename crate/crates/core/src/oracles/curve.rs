use serde::{Deserialize, Serialize};

use super::OracleError;

/// One point of an input/output power characteristic, both in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub pin_dbm: f64,
    pub pout_dbm: f64,
}

impl CurvePoint {
    pub const fn new(pin_dbm: f64, pout_dbm: f64) -> Self {
        Self { pin_dbm, pout_dbm }
    }
}

fn check_sorted(points: &[CurvePoint]) -> Result<(), OracleError> {
    for (i, p) in points.iter().enumerate() {
        if !(p.pin_dbm.is_finite() && p.pout_dbm.is_finite()) {
            return Err(OracleError::NonFinite(i));
        }
    }
    match points.windows(2).position(|w| w[1].pin_dbm < w[0].pin_dbm) {
        Some(i) => Err(OracleError::Unsorted(i + 1)),
        None => Ok(()),
    }
}

/// Linear interpolation of a sorted curve at `pin`. `pin` must lie in range.
fn interpolate(curve: &[CurvePoint], pin: f64) -> f64 {
    let idx = curve.partition_point(|p| p.pin_dbm < pin);
    if idx == 0 {
        return curve[0].pout_dbm;
    }
    if idx == curve.len() {
        return curve[curve.len() - 1].pout_dbm;
    }
    let (lo, hi) = (curve[idx - 1], curve[idx]);
    if hi.pin_dbm == pin || hi.pin_dbm == lo.pin_dbm {
        return hi.pout_dbm;
    }
    let t = (pin - lo.pin_dbm) / (hi.pin_dbm - lo.pin_dbm);
    lo.pout_dbm + t * (hi.pout_dbm - lo.pout_dbm)
}

/// Largest absolute output-power difference between `a` and `b`, evaluated at
/// each of `a`'s input powers with `b` linearly interpolated.
///
/// Both curves must be sorted by input power and `b` must span `a`'s range.
pub fn curve_max_error_db(a: &[CurvePoint], b: &[CurvePoint]) -> Result<f64, OracleError> {
    if a.is_empty() || b.is_empty() {
        return Err(OracleError::Empty);
    }
    check_sorted(a)?;
    check_sorted(b)?;
    let (need_lo, need_hi) = (a[0].pin_dbm, a[a.len() - 1].pin_dbm);
    let (have_lo, have_hi) = (b[0].pin_dbm, b[b.len() - 1].pin_dbm);
    if have_lo > need_lo || have_hi < need_hi {
        return Err(OracleError::Coverage {
            need_lo,
            need_hi,
            have_lo,
            have_hi,
        });
    }
    Ok(a
        .iter()
        .map(|p| libm::fabs(p.pout_dbm - interpolate(b, p.pin_dbm)))
        .fold(0.0, f64::max))
}
