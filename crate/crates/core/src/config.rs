//! JSON run configuration and the bundled presets.

use serde::{Deserialize, Serialize};

use crate::bgv::BgvParams;
use crate::control::ControllerRealization;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::packed::PackedLayout;
use crate::quant::{QuantParams, RangeMode};
use crate::sim::{ControllerKind, LoopSetup, PlantModel};

pub const F16_PRESET: &str = include_str!("../presets/f16.json");
pub const TOY_PRESET: &str = include_str!("../presets/toy.json");

/// Default decomposition base for the key-switching cost estimates.
pub const DEFAULT_NU: u128 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerConfig {
    /// `F = A - Lc C + B Kc`, `G = Lc`, `H = Kc`.
    Observer { lc: Vec<Vec<f64>>, kc: Vec<Vec<f64>>, x0: Vec<f64> },
    StateSpace { f: Vec<Vec<f64>>, g: Vec<Vec<f64>>, h: Vec<Vec<f64>>, x0: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantConfig {
    pub inv_l: f64,
    pub inv_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncryptionConfig {
    pub n: u64,
    /// Decimal string; the modulus does not fit a JSON number.
    pub q: String,
    pub p: usize,
    pub sigma: f64,
    pub r_bar: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_period")]
    pub sampling_period: f64,
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub quantization: QuantConfig,
    pub encryption: EncryptionConfig,
    pub horizon: usize,
    pub kind: ControllerKind,
    #[serde(default)]
    pub mode: RangeMode,
    #[serde(default = "default_nu")]
    pub nu: u128,
}

fn default_period() -> f64 {
    0.05
}

fn default_nu() -> u128 {
    DEFAULT_NU
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!("{name} must be a non-empty rectangular matrix")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{name} has non-finite entries")));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

fn vector(name: &str, v: &[f64]) -> Result<Vector> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{name} has non-finite entries")));
    }
    Ok(Vector::from_column_slice(v))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "f16" => Self::from_json(F16_PRESET),
            "toy" => Self::from_json(TOY_PRESET),
            _ => Err(Error::Config(format!("unknown preset {name:?} (expected f16 or toy)"))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn plant(&self) -> Result<PlantModel> {
        let p = &self.plant;
        PlantModel::new(matrix("plant.a", &p.a)?, matrix("plant.b", &p.b)?, matrix("plant.c", &p.c)?, vector("plant.x0", &p.x0)?)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn controller(&self, plant: &PlantModel) -> Result<ControllerRealization> {
        let ctrl = match &self.controller {
            ControllerConfig::Observer { lc, kc, x0 } => ControllerRealization::observer_based(
                &plant.a,
                &plant.b,
                &plant.c,
                &matrix("controller.lc", lc)?,
                &matrix("controller.kc", kc)?,
                vector("controller.x0", x0)?,
            ),
            ControllerConfig::StateSpace { f, g, h, x0 } => ControllerRealization::new(
                matrix("controller.f", f)?,
                matrix("controller.g", g)?,
                matrix("controller.h", h)?,
                vector("controller.x0", x0)?,
            ),
        };
        ctrl.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn bgv(&self) -> Result<BgvParams> {
        let e = &self.encryption;
        let q: u128 = e.q.trim().parse().map_err(|_| Error::Config(format!("encryption.q = {:?} is not an integer", e.q)))?;
        let params = BgvParams { n: e.n as u128, q, p: e.p, sigma: e.sigma, r_bar: e.r_bar };
        params.check().map_err(|e| Error::Config(e.to_string()))?;
        Ok(params)
    }

    pub fn quant(&self) -> Result<QuantParams> {
        let q = &self.quantization;
        QuantParams::from_inverse(q.inv_l, q.inv_s, self.encryption.n as u128, self.mode)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Builds and cross-checks everything a run needs.
    ///
    /// Controllability and observability failures keep their own error kinds;
    /// every other inconsistency is a configuration error.
    pub fn setup(&self) -> Result<LoopSetup> {
        if !(self.sampling_period > 0.0) {
            return Err(Error::Config("sampling_period must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.nu < 2 {
            return Err(Error::Config("nu must be at least 2".into()));
        }
        let plant = self.plant()?;
        let ctrl = self.controller(&plant)?;
        let setup = LoopSetup::new(plant, ctrl, self.quant()?, self.bgv()?).map_err(|e| match e {
            Error::DimMismatch(m) | Error::InvalidParams(m) => Error::Config(m),
            other => other,
        })?;
        if self.kind == ControllerKind::Packed {
            PackedLayout::new(setup.tc.n, setup.tc.h, setup.tc.l, setup.bgv.p).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(setup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in ["f16", "toy"] {
            let cfg = RunConfig::preset(name).unwrap();
            assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
        let f16 = RunConfig::preset("f16").unwrap();
        let b = f16.bgv().unwrap();
        assert_eq!((b.n, b.q, b.p, b.sigma), (65929217, 18889455798646780911617, 4096, 3.2));
        assert_eq!(f16.plant.c[1], vec![0.0, -0.268, 47.76, -4.56, 4.45]);
        let toy = RunConfig::preset("toy").unwrap();
        toy.setup().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        let base = RunConfig::preset("toy").unwrap();
        let mut c = base.clone();
        c.plant.a[0].push(1.0);
        assert!(matches!(c.setup(), Err(Error::Config(_))));
        let mut c = base.clone();
        c.encryption.q = "12x".into();
        assert!(matches!(c.setup(), Err(Error::Config(_))));
        let mut c = base.clone();
        c.encryption.p = 3;
        assert!(matches!(c.setup(), Err(Error::Config(_))));
        let mut c = base.clone();
        c.quantization.inv_s = 0.5;
        assert!(matches!(c.setup(), Err(Error::Config(_))));
        assert!(RunConfig::from_json("{\"horizon\": 3}").is_err());
        assert!(RunConfig::from_json(&base.to_json().replace("\"horizon\"", "\"bogus\": 1, \"horizon\"")).is_err());
        assert!(RunConfig::preset("nope").is_err());
    }

    #[test]
    fn packed_kind_needs_enough_slots() {
        let mut c = RunConfig::preset("f16").unwrap();
        c.encryption.p = 8;
        c.encryption.n = 17;
        c.encryption.q = "1000000000000000000000007".into();
        c.kind = ControllerKind::Packed;
        let err = c.setup().unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("slots")), "{err:?}");
    }
}
