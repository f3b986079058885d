use core::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use super::OracleError;

/// Rapp power-amplifier parameters in log units.
///
/// The model is the power-domain form
/// `p_out = G·p_in / (1 + (G·p_in / P_sat)^s)^(1/s)` with all powers linear.
/// The voltage-domain variant with exponent `2p` is the same curve with `s = 2p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RappParams {
    /// Small-signal gain, dB.
    pub g_db: f64,
    /// Saturated output power, dBm.
    pub psat_dbm: f64,
    /// Knee smoothness, dimensionless, > 0.
    pub s: f64,
}

impl RappParams {
    pub fn new(g_db: f64, psat_dbm: f64, s: f64) -> Self {
        Self { g_db, psat_dbm, s }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.g_db.is_finite() && self.psat_dbm.is_finite()) {
            return Err(OracleError::InvalidParams("gain and saturation power must be finite"));
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(OracleError::InvalidParams("smoothness factor must be positive"));
        }
        Ok(())
    }

    /// Input power at which the linear extrapolation reaches `P_sat`.
    pub fn knee_pin_dbm(&self) -> f64 {
        self.psat_dbm - self.g_db
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * libm::log10(lin)
}

/// `log10(1 + 10^u)` without overflow for large `u`.
fn log10_one_plus_pow10(u: f64) -> f64 {
    if u > 0.0 {
        u + libm::log1p(libm::exp(-u * LN_10)) / LN_10
    } else {
        libm::log1p(libm::exp(u * LN_10)) / LN_10
    }
}

/// Output power (dBm) of the Rapp model for input power `pin_dbm`.
///
/// Evaluated in log form so that deep saturation neither overflows nor rises
/// above `psat_dbm`.
pub fn rapp_pout_dbm(pin_dbm: f64, p: &RappParams) -> f64 {
    let linear_out = pin_dbm + p.g_db;
    let u = p.s * (linear_out - p.psat_dbm) / 10.0;
    if u > 0.0 {
        // p_out = P_sat / (1 + (P_sat / G·p_in)^s)^(1/s)
        p.psat_dbm - 10.0 / p.s * log10_one_plus_pow10(-u)
    } else {
        linear_out - 10.0 / p.s * log10_one_plus_pow10(u)
    }
}

fn compression_db(pin_dbm: f64, p: &RappParams) -> f64 {
    pin_dbm + p.g_db - rapp_pout_dbm(pin_dbm, p)
}

/// Input and output power at 1 dB gain compression, found by bisection.
///
/// Compression grows monotonically from 0 with input power and exceeds 1 dB
/// one dB past the knee, so the root always exists for `s > 0`.
pub fn compression_point_1db(p: &RappParams) -> Result<(f64, f64), OracleError> {
    p.validate()?;
    let knee = p.knee_pin_dbm();
    let mut hi = knee + 1.0;
    let mut width = 10.0;
    let mut lo = knee - width;
    while compression_db(lo, p) >= 1.0 {
        width *= 2.0;
        lo = knee - width;
        if width > 1e6 {
            return Err(OracleError::InvalidParams("smoothness too small to bracket P1dB"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if compression_db(mid, p) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let pin = 0.5 * (lo + hi);
    Ok((pin, rapp_pout_dbm(pin, p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOG2_DB: f64 = 3.010_299_956_639_812; // 10·log10(2)

    fn pa(s: f64) -> RappParams {
        RappParams::new(20.0, 43.0, s)
    }

    #[test]
    fn small_signal_limit_is_linear_gain() {
        let pout = rapp_pout_dbm(-60.0, &pa(2.0));
        assert!((pout - (-40.0)).abs() < 1e-6, "{pout}");
    }

    #[test]
    fn knee_matches_closed_form() {
        for s in [0.5, 1.0, 2.0, 4.0] {
            let pout = rapp_pout_dbm(23.0, &pa(s));
            assert!((pout - (43.0 - LOG2_DB / s)).abs() < 1e-6, "s={s}: {pout}");
        }
        assert!((rapp_pout_dbm(23.0, &pa(2.0)) - 41.494_850_021_680_09).abs() < 1e-9);
    }

    #[test]
    fn matches_linear_domain_formula() {
        let p = pa(2.5);
        for pin in [-20.0, 0.0, 15.0, 22.0, 23.5, 30.0] {
            let g = db_to_linear(p.g_db);
            let psat = db_to_linear(p.psat_dbm);
            let x = g * db_to_linear(pin);
            let lin = x / libm::pow(1.0 + libm::pow(x / psat, p.s), 1.0 / p.s);
            assert!((linear_to_db(lin) - rapp_pout_dbm(pin, &p)).abs() < 1e-9);
        }
    }

    #[test]
    fn saturation_limit() {
        let pout = rapp_pout_dbm(80.0, &pa(2.0));
        assert!((pout - 43.0).abs() < 1e-3);
        assert!(pout <= 43.0);
        assert!(rapp_pout_dbm(1e6, &pa(0.3)) <= 43.0);
    }

    #[test]
    fn p1db_is_self_consistent() {
        let p = pa(2.0);
        let (pin, pout) = compression_point_1db(&p).unwrap();
        assert!((rapp_pout_dbm(pin, &p) - (pin + 19.0)).abs() < 1e-4);
        assert!((pout - (pin + 19.0)).abs() < 1e-4);
    }

    #[test]
    fn sharper_knee_compresses_later() {
        let a = compression_point_1db(&pa(1.0)).unwrap().0;
        let b = compression_point_1db(&pa(2.0)).unwrap().0;
        let c = compression_point_1db(&pa(6.0)).unwrap().0;
        assert!(a < b && b < c);
    }

    #[test]
    fn hard_limiter_limit() {
        // As s grows the curve approaches min(pin + G, P_sat): 1 dB of
        // compression then sits one dB past the knee with the output at P_sat.
        let p = pa(50.0);
        let (pin, pout) = compression_point_1db(&p).unwrap();
        assert!((pout - 43.0).abs() < 0.2, "{pout}");
        assert!((pin - 24.0).abs() < 0.2, "{pin}");
    }

    #[test]
    fn very_soft_knee_still_brackets() {
        let (pin, pout) = compression_point_1db(&pa(0.1)).unwrap();
        assert!((pin + 20.0 - pout - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_smoothness() {
        assert!(compression_point_1db(&pa(0.0)).is_err());
        assert!(compression_point_1db(&pa(f64::NAN)).is_err());
    }
}
