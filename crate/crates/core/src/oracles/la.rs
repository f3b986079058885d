use serde::{Deserialize, Serialize};

use super::OracleError;

/// Memoryless limiting-amplifier parameters. Voltages in volts, gain in V/V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaParams {
    pub gain: f64,
    pub v_out_max: f64,
    pub v_out_min: f64,
    pub quiescent: f64,
    pub enabled: bool,
}

impl LaParams {
    pub fn validate(&self) -> Result<(), OracleError> {
        let finite = [self.gain, self.v_out_max, self.v_out_min, self.quiescent]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(OracleError::InvalidParams("limiting amplifier parameters must be finite"));
        }
        if self.gain <= 0.0 {
            return Err(OracleError::InvalidParams("gain must be positive"));
        }
        if !(self.v_out_min < self.quiescent && self.quiescent < self.v_out_max) {
            return Err(OracleError::InvalidParams(
                "require v_out_min < quiescent < v_out_max",
            ));
        }
        Ok(())
    }

    pub fn with_enabled(self, enabled: bool) -> Self {
        Self { enabled, ..self }
    }
}

/// Output voltage of the three-phase limiting amplifier.
///
/// Disabled: the quiescent level. Enabled: `gain·v_in` clamped to the output
/// swing limits.
pub fn la_transfer(v_in: f64, p: &LaParams) -> f64 {
    if !p.enabled {
        return p.quiescent;
    }
    (p.gain * v_in).clamp(p.v_out_min, p.v_out_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LaParams {
        LaParams {
            gain: 10.0,
            v_out_max: 0.4,
            v_out_min: -0.4,
            quiescent: 0.0,
            enabled: true,
        }
    }

    #[test]
    fn linear_region() {
        assert!((la_transfer(0.01, &params()) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn clamps_both_rails() {
        assert_eq!(la_transfer(0.2, &params()), 0.4);
        assert_eq!(la_transfer(-0.2, &params()), -0.4);
    }

    #[test]
    fn disabled_holds_quiescent() {
        let p = LaParams { quiescent: 0.05, ..params() }.with_enabled(false);
        for v in [-1.0, 0.0, 0.003, 7.5] {
            assert_eq!(la_transfer(v, &p), 0.05);
        }
    }

    #[test]
    fn validation() {
        assert!(params().validate().is_ok());
        assert!(LaParams { gain: 0.0, ..params() }.validate().is_err());
        assert!(LaParams { quiescent: 0.4, ..params() }.validate().is_err());
        assert!(LaParams { v_out_max: f64::NAN, ..params() }.validate().is_err());
    }
}
