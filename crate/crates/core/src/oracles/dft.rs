use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use super::OracleError;

/// A double-precision complex sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexSample {
    pub re: f64,
    pub im: f64,
}

impl ComplexSample {
    pub const ZERO: Self = Self { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub const fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.re * k, self.im * k)
    }

    /// Largest of the absolute component differences.
    pub fn max_component_diff(&self, other: &Self) -> f64 {
        libm::fabs(self.re - other.re).max(libm::fabs(self.im - other.im))
    }
}

impl Add for ComplexSample {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for ComplexSample {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for ComplexSample {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

/// Direct O(N²) discrete Fourier transform.
///
/// Forward: `X[k] = Σₙ x[n]·exp(−2πi·nk/N)`. Inverse uses `+i` in the exponent
/// and scales by `1/N`, so `dft(dft(x, false), true) ≈ x`.
///
/// The twiddle angle is computed from `(n·k) mod N` so that large products do
/// not lose precision in the argument to `sin`/`cos`.
pub fn dft(x: &[ComplexSample], inverse: bool) -> Result<Vec<ComplexSample>, OracleError> {
    if x.is_empty() {
        return Err(OracleError::Empty);
    }
    if let Some(i) = x.iter().position(|s| !s.is_finite()) {
        return Err(OracleError::NonFinite(i));
    }
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let step = sign * 2.0 * PI / n as f64;

    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = ComplexSample::ZERO;
        for (j, sample) in x.iter().enumerate() {
            let phase = ((j * k) % n) as f64 * step;
            let twiddle = ComplexSample::new(libm::cos(phase), libm::sin(phase));
            acc = acc + *sample * twiddle;
        }
        out.push(if inverse { acc.scale(1.0 / n as f64) } else { acc });
    }
    Ok(out)
}

/// Max absolute component error of `idft(dft(x))` against `x`.
///
/// Returns `0.0` for an empty input.
pub fn roundtrip_error(x: &[ComplexSample]) -> f64 {
    let Ok(spectrum) = dft(x, false) else {
        return 0.0;
    };
    let Ok(back) = dft(&spectrum, true) else {
        return 0.0;
    };
    x.iter()
        .zip(&back)
        .map(|(a, b)| a.max_component_diff(b))
        .fold(0.0, f64::max)
}
