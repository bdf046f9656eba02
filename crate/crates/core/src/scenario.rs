//! Sensor roster, per-sensor intensity models and scenario-level constants.

use std::collections::BTreeSet;

use crate::intensity::{IntegrationMethod, IntensityModel, RateBounds};
use crate::{Error, Result};

/// One sensor: background rate under both hypotheses and the additional
/// source rate present only under the alternative.
#[derive(Debug, Clone)]
pub struct Sensor {
    id: u32,
    position: Option<f64>,
    background: IntensityModel,
    source: IntensityModel,
    alternative: IntensityModel,
}

impl Sensor {
    pub fn new(id: u32, background: IntensityModel, source: IntensityModel) -> Self {
        let alternative = IntensityModel::Sum(vec![background.clone(), source.clone()]);
        Self {
            id,
            position: None,
            background,
            source,
            alternative,
        }
    }

    pub fn with_position(mut self, position: f64) -> Self {
        self.position = Some(position);
        self
    }

    /// 1-based sensor identifier, as used on the wire.
    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn position(&self) -> Option<f64> {
        self.position
    }

    pub fn background(&self) -> &IntensityModel {
        &self.background
    }

    pub fn source(&self) -> &IntensityModel {
        &self.source
    }

    /// Rate observed when the source is present: background plus source.
    pub fn alternative(&self) -> &IntensityModel {
        &self.alternative
    }
}

/// Expected counts and per-jump factor bounds for a scenario.
///
/// Every jump multiplies the likelihood ratio by `1 + ν_i(t)/β_i(t)`, which
/// lies in `[min_jump_factor, max_jump_factor]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConstants {
    /// Decision horizon (s).
    pub horizon: f64,
    /// Σᵢ ∫₀ᵀ βᵢ (counts).
    pub expected_background: f64,
    /// Σᵢ ∫₀ᵀ νᵢ (counts).
    pub expected_source: f64,
    /// `1 + ν_min / β_max`.
    pub min_jump_factor: f64,
    /// `1 + ν_max / β_min`.
    pub max_jump_factor: f64,
    pub background_bounds: RateBounds,
    pub source_bounds: RateBounds,
}

impl ScenarioConstants {
    pub fn ln_min_jump_factor(&self) -> f64 {
        (self.min_jump_factor - 1.0).ln_1p()
    }

    pub fn ln_max_jump_factor(&self) -> f64 {
        (self.max_jump_factor - 1.0).ln_1p()
    }
}

/// Optional overrides for the source-rate bounds entering the jump factors.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SourceBoundsOverride {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    horizon: f64,
    sensors: Vec<Sensor>,
    source_override: SourceBoundsOverride,
}

impl Scenario {
    pub fn new(horizon: f64, sensors: Vec<Sensor>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::input(format!("horizon must be positive, got {horizon}")));
        }
        if sensors.is_empty() {
            return Err(Error::input("scenario needs at least one sensor"));
        }
        let mut seen = BTreeSet::new();
        for s in &sensors {
            if s.id == 0 || !seen.insert(s.id) {
                return Err(Error::input(format!("sensor ids must be distinct and >= 1 (got {})", s.id)));
            }
            s.background
                .validate(horizon, true)
                .map_err(|e| Error::model(format!("sensor {} background: {e}", s.id)))?;
            s.source
                .validate(horizon, false)
                .map_err(|e| Error::model(format!("sensor {} source: {e}", s.id)))?;
        }
        Ok(Self {
            horizon,
            sensors,
            source_override: SourceBoundsOverride::default(),
        })
    }

    pub fn with_source_bounds(mut self, bounds: SourceBoundsOverride) -> Result<Self> {
        if let (Some(lo), Some(hi)) = (bounds.min, bounds.max) {
            if lo > hi {
                return Err(Error::input("source bound override has min > max"));
            }
        }
        if bounds.min.is_some_and(|v| !(v >= 0.0)) || bounds.max.is_some_and(|v| !v.is_finite()) {
            return Err(Error::input("source bound overrides must be finite and non-negative"));
        }
        self.source_override = bounds;
        Ok(self)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    pub fn sensor_ids(&self) -> Vec<u32> {
        self.sensors.iter().map(|s| s.id).collect()
    }

    pub fn sensor(&self, id: u32) -> Result<&Sensor> {
        self.sensors
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::input(format!("no sensor with id {id}")))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::input(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// Distance between sensor `id` and the moving source at time `t`.
    pub fn source_distance(&self, id: u32, t: f64) -> Result<f64> {
        self.check_time(t)?;
        match self.sensor(id)?.source() {
            IntensityModel::RadiationSource(src) => Ok(src.distance(t)),
            _ => Err(Error::input("source distance is defined only for radiation-source models")),
        }
    }

    pub fn source_intensity(&self, id: u32, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.sensor(id)?.source().rate(t))
    }

    /// ∫₀ᵀ νᵢ(s) ds for sensor `id`.
    pub fn integrated_source_intensity(&self, id: u32) -> Result<f64> {
        Ok(self.sensor(id)?.source().integrate(0.0, self.horizon)?.value)
    }

    /// Per-sensor ∫₀ᵀ νᵢ together with how it was computed, in roster order.
    pub fn source_integrals(&self) -> Result<Vec<(u32, f64, IntegrationMethod)>> {
        self.sensors
            .iter()
            .map(|s| {
                let i = s.source().integrate(0.0, self.horizon)?;
                Ok((s.id, i.value, i.method))
            })
            .collect()
    }

    pub fn constants(&self) -> Result<ScenarioConstants> {
        let t = self.horizon;
        let mut expected_background = 0.0;
        let mut expected_source = 0.0;
        let mut beta = RateBounds {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        let mut nu = beta;
        for s in &self.sensors {
            expected_background += s.background().integrate(0.0, t)?.value;
            expected_source += s.source().integrate(0.0, t)?.value;
            let b = s.background().bounds_on(0.0, t);
            let n = s.source().bounds_on(0.0, t);
            beta = RateBounds {
                min: beta.min.min(b.min),
                max: beta.max.max(b.max),
            };
            nu = RateBounds {
                min: nu.min.min(n.min),
                max: nu.max.max(n.max),
            };
        }
        if let Some(v) = self.source_override.min {
            nu.min = v;
        }
        if let Some(v) = self.source_override.max {
            nu.max = v;
        }
        Ok(ScenarioConstants {
            horizon: t,
            expected_background,
            expected_source,
            min_jump_factor: 1.0 + nu.min / beta.max,
            max_jump_factor: 1.0 + nu.max / beta.min,
            background_bounds: beta,
            source_bounds: nu,
        })
    }

    /// The first `k` sensors of the roster, same horizon.
    pub fn truncated(&self, k: usize) -> Result<Scenario> {
        if k == 0 || k > self.sensors.len() {
            return Err(Error::input(format!(
                "cannot keep {k} of {} sensors",
                self.sensors.len()
            )));
        }
        Ok(Scenario {
            horizon: self.horizon,
            sensors: self.sensors[..k].to_vec(),
            source_override: self.source_override,
        })
    }

    /// The scenario with the listed sensors removed (out of commission).
    pub fn without(&self, dropped: &[u32]) -> Result<Scenario> {
        for id in dropped {
            self.sensor(*id)?;
        }
        let sensors: Vec<Sensor> = self
            .sensors
            .iter()
            .filter(|s| !dropped.contains(&s.id))
            .cloned()
            .collect();
        if sensors.is_empty() {
            return Err(Error::input("dropout removes every sensor"));
        }
        Ok(Scenario {
            horizon: self.horizon,
            sensors,
            source_override: self.source_override,
        })
    }
}
