//! Scenario configuration files and built-in presets.
//!
//! Configs are flat TOML: scalar keys plus per-sensor arrays. All values are
//! SI (seconds, meters, counts per second). Example (the `paper-sec6` preset):
//!
//! ```toml
//! background = [8.0, 5.0, 4.0, 3.0, 2.0, 2.0, 2.0, 3.0, 4.0, 8.0]
//! source_kind = "radiation"
//! spacing = 11.0
//! source_x0 = -4.0
//! source_offset = 0.36195
//! source_speed = 17.0
//! source_strength = 506.8
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::intensity::{IntensityModel, RadiationSource, Tabulated};
use crate::scenario::{Scenario, Sensor, SourceBoundsOverride};
use crate::{Error, Result};

/// 14¼ inches, the source track offset of the moving-source example.
pub const PAPER_OFFSET_M: f64 = 14.25 * 0.0254;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Radiation,
    Constant,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Optional; must equal `background.len()` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor_count: Option<usize>,
    /// Constant background rate per sensor (cps). Defines the sensor count.
    pub background: Vec<f64>,
    /// Decision horizon (s). Radiation scenarios derive it when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub source_kind: SourceKind,

    /// Uniform sensor spacing along +x starting at 0 (m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    /// Explicit sensor x-coordinates (m); overrides `spacing`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_speed: Option<f64>,
    /// Strength times cross-section (cps·m²).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_strength: Option<f64>,

    /// Per-sensor constant source rates (cps), for `source_kind = "constant"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_rates: Option<Vec<f64>>,

    /// Shared knot times and per-sensor knot rates for `source_kind = "tabulated"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_table: Option<Vec<Vec<f64>>>,

    /// Overrides for the source-rate bounds used in the jump factors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_max: Option<f64>,
}

fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing key `{key}` for this source_kind")))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn sensor_count(&self) -> usize {
        self.background.len()
    }

    /// Sensor x-coordinates for radiation scenarios.
    pub fn sensor_positions(&self) -> Result<Vec<f64>> {
        let k = self.sensor_count();
        match (&self.positions, self.spacing) {
            (Some(p), _) if p.len() == k => Ok(p.clone()),
            (Some(p), _) => Err(Error::Config(format!("{} positions for {k} sensors", p.len()))),
            (None, Some(l)) => Ok((0..k).map(|i| i as f64 * l).collect()),
            (None, None) => Err(Error::Config("radiation scenario needs `spacing` or `positions`".into())),
        }
    }

    /// The configured horizon, or for radiation scenarios the time at which
    /// the source is as far past the last sensor as it started before the
    /// first: `(p_first + p_last − 2 x₀) / v`. For uniform spacing this is
    /// `((k−1)ℓ − 2x₀)/v`.
    pub fn resolved_horizon(&self) -> Result<f64> {
        if let Some(t) = self.horizon {
            return Ok(t);
        }
        match self.source_kind {
            SourceKind::Radiation => {
                let p = self.sensor_positions()?;
                let x0 = require(self.source_x0, "source_x0")?;
                let v = require(self.source_speed, "source_speed")?;
                let first = p.iter().copied().fold(f64::INFINITY, f64::min);
                let last = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok((first + last - 2.0 * x0) / v)
            }
            _ => Err(Error::Config("missing key `horizon`".into())),
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        let k = self.sensor_count();
        if k == 0 {
            return Err(Error::Config("`background` must list at least one sensor".into()));
        }
        if let Some(n) = self.sensor_count {
            if n != k {
                return Err(Error::Config(format!("sensor_count = {n} but {k} background rates")));
            }
        }
        let horizon = self.resolved_horizon()?;
        let sources: Vec<(IntensityModel, Option<f64>)> = match self.source_kind {
            SourceKind::Radiation => {
                let x0 = require(self.source_x0, "source_x0")?;
                let h = require(self.source_offset, "source_offset")?;
                let v = require(self.source_speed, "source_speed")?;
                let strength = require(self.source_strength, "source_strength")?;
                if !(h > 0.0) {
                    return Err(Error::Config("source_offset must be > 0".into()));
                }
                self.sensor_positions()?
                    .into_iter()
                    .map(|p| {
                        let src = RadiationSource {
                            sensor_position: p,
                            start: x0,
                            offset: h,
                            speed: v,
                            strength,
                        };
                        (src.into(), Some(p))
                    })
                    .collect()
            }
            SourceKind::Constant => {
                let rates = self
                    .source_rates
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing key `source_rates`".into()))?;
                if rates.len() != k {
                    return Err(Error::Config(format!("{} source_rates for {k} sensors", rates.len())));
                }
                rates.iter().map(|&r| (IntensityModel::constant(r), None)).collect()
            }
            SourceKind::Tabulated => {
                let times = self
                    .source_times
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing key `source_times`".into()))?;
                let table = self
                    .source_table
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing key `source_table`".into()))?;
                if table.len() != k {
                    return Err(Error::Config(format!("{} source_table rows for {k} sensors", table.len())));
                }
                table
                    .iter()
                    .map(|row| Ok((Tabulated::new(times.clone(), row.clone())?.into(), None)))
                    .collect::<Result<_>>()?
            }
        };
        let sensors = self
            .background
            .iter()
            .zip(sources)
            .enumerate()
            .map(|(i, (&beta, (src, pos)))| {
                let s = Sensor::new(i as u32 + 1, IntensityModel::constant(beta), src);
                match pos {
                    Some(p) => s.with_position(p),
                    None => s,
                }
            })
            .collect();
        Scenario::new(horizon, sensors)?.with_source_bounds(SourceBoundsOverride {
            min: self.nu_min,
            max: self.nu_max,
        })
    }

    /// Ten-sensor moving-source array: 11 m spacing, source starting at
    /// x = −4 m, 14¼ in off the sensor line, 17 m/s, strength 506.8 cps·m².
    pub fn paper_sec6() -> Self {
        Self {
            sensor_count: Some(10),
            background: vec![8.0, 5.0, 4.0, 3.0, 2.0, 2.0, 2.0, 3.0, 4.0, 8.0],
            horizon: None,
            source_kind: SourceKind::Radiation,
            spacing: Some(11.0),
            positions: None,
            source_x0: Some(-4.0),
            source_offset: Some(PAPER_OFFSET_M),
            source_speed: Some(17.0),
            source_strength: Some(506.8),
            source_rates: None,
            source_times: None,
            source_table: None,
            nu_min: None,
            nu_max: None,
        }
    }

    /// Constant rates β = 5, ν = 1 on `k` sensors with T = 1 s.
    pub fn toy_constant(k: usize) -> Self {
        Self {
            sensor_count: None,
            background: vec![5.0; k],
            horizon: Some(1.0),
            source_kind: SourceKind::Constant,
            spacing: None,
            positions: None,
            source_x0: None,
            source_offset: None,
            source_speed: None,
            source_strength: None,
            source_rates: Some(vec![1.0; k]),
            source_times: None,
            source_table: None,
            nu_min: None,
            nu_max: None,
        }
    }

    /// Two sensors, weak source passing close and fast: a sharply peaked
    /// source rate on a flat background.
    pub fn toy_inhomogeneous() -> Self {
        Self {
            sensor_count: None,
            background: vec![5.0, 5.0],
            horizon: None,
            source_kind: SourceKind::Radiation,
            spacing: Some(2.0),
            positions: None,
            source_x0: Some(-1.0),
            source_offset: Some(0.1),
            source_speed: Some(2.0),
            source_strength: Some(0.2),
            source_rates: None,
            source_times: None,
            source_table: None,
            nu_min: None,
            nu_max: None,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-sec6" => Ok(Self::paper_sec6()),
            "toy-constant" => Ok(Self::toy_constant(3)),
            "toy-single" => Ok(Self::toy_constant(1)),
            "toy-inhomogeneous" => Ok(Self::toy_inhomogeneous()),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (known: {})",
                PRESETS.join(", ")
            ))),
        }
    }
}

pub const PRESETS: [&str; 4] = ["paper-sec6", "toy-constant", "toy-single", "toy-inhomogeneous"];
