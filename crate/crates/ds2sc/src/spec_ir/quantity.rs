use serde_json::Value;
use thiserror::Error;

/// Physical dimension of a quantity and the base unit it normalizes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Nanoseconds.
    Time,
    /// Volts.
    Voltage,
    /// Hertz.
    Frequency,
    /// dBm.
    Power,
    /// dB.
    Decibel,
    /// Dimensionless ratio (V/V).
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantityError {
    #[error("`{0}` is not a number with an optional unit")]
    Malformed(String),
    #[error("unit `{unit}` does not measure {dimension:?}")]
    WrongUnit { unit: String, dimension: Dimension },
    #[error("non-positive power `{0}` cannot be expressed in dBm")]
    NonPositivePower(String),
    #[error("expected a number or a string, found {0}")]
    WrongType(String),
}

/// Parses a number or a string such as `"10 ns"`, `"0.4V"` or `"-60 dBm"` and
/// normalizes it to the base unit of `dim`. Bare numbers take `default_unit`,
/// or the base unit when that is `None`.
pub fn parse_quantity(v: &Value, dim: Dimension, default_unit: Option<&str>) -> Result<f64, QuantityError> {
    let (number, unit) = match v {
        Value::Number(n) => (n.as_f64().expect("finite JSON number"), None),
        Value::String(s) => split_number(s)?,
        other => return Err(QuantityError::WrongType(other.to_string())),
    };
    let unit = unit.or(default_unit).map(str::trim).filter(|u| !u.is_empty());
    match unit {
        None => Ok(number),
        Some(u) => convert(number, u, dim),
    }
}

fn split_number(s: &str) -> Result<(f64, Option<&str>), QuantityError> {
    let t = s.trim();
    let malformed = || QuantityError::Malformed(s.to_string());
    // longest numeric prefix, including an exponent
    let end = t
        .char_indices()
        .take_while(|&(i, c)| {
            c.is_ascii_digit()
                || c == '.'
                || ((c == '-' || c == '+') && (i == 0 || matches!(t.as_bytes()[i - 1], b'e' | b'E')))
                || ((c == 'e' || c == 'E') && i > 0 && t[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+'))
        })
        .last()
        .map(|(i, c)| i + c.len_utf8())
        .ok_or_else(malformed)?;
    let number: f64 = t[..end].parse().map_err(|_| malformed())?;
    if !number.is_finite() {
        return Err(malformed());
    }
    let rest = t[end..].trim();
    Ok((number, (!rest.is_empty()).then_some(rest)))
}

fn convert(x: f64, unit: &str, dim: Dimension) -> Result<f64, QuantityError> {
    let scale = match (dim, unit) {
        (Dimension::Time, "ps") => 1e-3,
        (Dimension::Time, "ns") => 1.0,
        (Dimension::Time, "us" | "µs") => 1e3,
        (Dimension::Time, "ms") => 1e6,
        (Dimension::Time, "s") => 1e9,
        (Dimension::Voltage, "V") => 1.0,
        (Dimension::Voltage, "mV") => 1e-3,
        (Dimension::Voltage, "uV" | "µV") => 1e-6,
        (Dimension::Frequency, "Hz") => 1.0,
        (Dimension::Frequency, "kHz") => 1e3,
        (Dimension::Frequency, "MHz") => 1e6,
        (Dimension::Frequency, "GHz") => 1e9,
        (Dimension::Power, "dBm") | (Dimension::Decibel, "dB") | (Dimension::Ratio, "V/V") => 1.0,
        (Dimension::Power, "W" | "mW") => {
            let mw = if unit == "W" { x * 1e3 } else { x };
            if mw <= 0.0 {
                return Err(QuantityError::NonPositivePower(format!("{x} {unit}")));
            }
            return Ok(10.0 * mw.log10());
        }
        (Dimension::Ratio, "dB") => return Ok(10f64.powf(x / 20.0)),
        _ => {
            return Err(QuantityError::WrongUnit {
                unit: unit.to_string(),
                dimension: dim,
            })
        }
    };
    Ok(x * scale)
}
