//! Scaling and rounding of real signals and gains into `Z_N`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::ring::centered_mod;

/// What to do when a scaled value leaves the plaintext range.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeMode {
    /// Fail with [`Error::RangeExceeded`].
    #[default]
    Strict,
    /// Log a warning and wrap modulo `N`, to show what the range condition prevents.
    #[serde(alias = "wraparound")]
    WraparoundDemo,
}

/// Signal resolution `L`, gain resolution `s` and plaintext modulus `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    pub l: f64,
    pub s: f64,
    pub n: u128,
    #[serde(default)]
    pub mode: RangeMode,
}

impl QuantParams {
    pub fn new(l: f64, s: f64, n: u128, mode: RangeMode) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParams(format!("L = {l} must be positive")));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParams(format!("1/s = {} must be at least 1", 1.0 / s)));
        }
        if n < 2 {
            return Err(Error::InvalidParams("N must be at least 2".into()));
        }
        Ok(Self { l, s, n, mode })
    }

    /// From the resolutions `1/L` and `1/s`.
    pub fn from_inverse(inv_l: f64, inv_s: f64, n: u128, mode: RangeMode) -> Result<Self> {
        Self::new(1.0 / inv_l, 1.0 / inv_s, n, mode)
    }

    pub fn signal(&self, x: f64) -> Result<i64> {
        quantize(x, self.l, self.n, self.mode)
    }

    pub fn signals(&self, xs: &[f64]) -> Result<Vec<i64>> {
        xs.iter().map(|&x| self.signal(x)).collect()
    }

    /// `round(Hc / s)` entry-wise.
    pub fn gains(&self, m: &Mat) -> Result<DMatrix<i64>> {
        let mut out = DMatrix::<i64>::zeros(m.nrows(), m.ncols());
        for (o, &x) in out.iter_mut().zip(m.iter()) {
            *o = quantize(x, self.s, self.n, self.mode)?;
        }
        Ok(out)
    }

    /// `m L s`, the actuator rescaling.
    pub fn rescale(&self, m: i64) -> f64 {
        rescale(m, self.l, self.s)
    }

    /// `m L`, the value of a quantized signal.
    pub fn signal_value(&self, m: i64) -> f64 {
        m as f64 * self.l
    }

    /// Applies the range policy to an integer computed in the clear.
    pub fn wrap(&self, v: i128) -> Result<i64> {
        let half = self.n as f64 / 2.0;
        if (v.unsigned_abs() as f64) + 0.5 < half {
            return Ok(v as i64);
        }
        match self.mode {
            RangeMode::Strict => Err(Error::RangeExceeded { value: v as f64, half_modulus: half }),
            RangeMode::WraparoundDemo => {
                log::warn!("{v} leaves the plaintext range (N/2 = {half}); wrapping");
                Ok(centered_mod(v, self.n) as i64)
            }
        }
    }
}

/// `floor(x + 1/2)`.
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// `round_half_up(x / scale)` as an element of `Z_N`, guarded by `|x/scale| + 1/2 < N/2`.
pub fn quantize(x: f64, scale: f64, n: u128, mode: RangeMode) -> Result<i64> {
    let v = x / scale;
    let half = n as f64 / 2.0;
    if !v.is_finite() || v.abs() + 0.5 >= half {
        return match mode {
            RangeMode::Strict => Err(Error::RangeExceeded { value: v, half_modulus: half }),
            RangeMode::WraparoundDemo if v.is_finite() && v.abs() < 9e15 => {
                log::warn!("{v} leaves the plaintext range (N/2 = {half}); wrapping");
                Ok(centered_mod(round_half_up(v) as i128, n) as i64)
            }
            RangeMode::WraparoundDemo => Err(Error::RangeExceeded { value: v, half_modulus: half }),
        };
    }
    Ok(round_half_up(v) as i64)
}

/// `m L s`.
pub fn rescale(m: i64, l: f64, s: f64) -> f64 {
    m as f64 * (l * s)
}
