//! Per-sensor log-likelihood ratios, their fusion, and the pathwise envelope.
//!
//! For sensor `i` with background `βᵢ`, source `νᵢ` and jump times `τₙ`,
//!
//! ```text
//! log Lᵢ = −∫₀ᵀ νᵢ(s) ds + Σₙ log(1 + νᵢ(τₙ)/βᵢ(τₙ))
//! ```
//!
//! and the network statistic is `log L = Σᵢ log Lᵢ`. Everything stays in the
//! log domain; a jump factor near 2·10³ overflows raw products quickly.

use crate::intensity::IntegrationMethod;
use crate::poisson_sim::EventPath;
use crate::scenario::{Scenario, ScenarioConstants, Sensor};
use crate::summation::{pairwise_sum, CompensatedSum};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalStatistic {
    pub sensor: u32,
    /// Natural log of the sensor's likelihood ratio.
    pub log_lr: f64,
    /// `N_T` for this sensor.
    pub count: usize,
    /// `∫₀ᵀ ν` (counts).
    pub integrated_source: f64,
    pub integration: IntegrationMethod,
}

/// `log(1 + ν(t)/β(t))`, the log-likelihood increment of a jump at `t`.
pub fn jump_log_factor(sensor: &Sensor, t: f64) -> Result<f64> {
    let beta = sensor.background().rate(t);
    if !(beta > 0.0) {
        return Err(Error::model(format!(
            "sensor {}: background rate {beta} at t = {t} is not positive",
            sensor.id()
        )));
    }
    let ratio = sensor.source().rate(t) / beta;
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::model(format!("sensor {}: invalid rate ratio {ratio} at t = {t}", sensor.id())));
    }
    Ok(ratio.ln_1p())
}

pub fn local_log_lr(path: &EventPath, sensor: &Sensor, horizon: f64) -> Result<LocalStatistic> {
    if path.horizon() != horizon {
        return Err(Error::input(format!(
            "path horizon {} does not match model horizon {horizon}",
            path.horizon()
        )));
    }
    let integral = sensor.source().integrate(0.0, horizon)?;
    let mut acc = CompensatedSum::new();
    acc.add(-integral.value);
    for &t in path.jump_times() {
        acc.add(jump_log_factor(sensor, t)?);
    }
    Ok(LocalStatistic {
        sensor: sensor.id(),
        log_lr: acc.value(),
        count: path.count(),
        integrated_source: integral.value,
        integration: integral.method,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedStatistic {
    /// `Σᵢ log Lᵢ`, summed pairwise in ascending sensor order.
    pub log_lr_total: f64,
    /// Inputs sorted by sensor id.
    pub per_sensor: Vec<LocalStatistic>,
}

impl FusedStatistic {
    /// `L_T` itself; overflows to infinity or underflows to zero easily.
    pub fn likelihood_ratio(&self) -> f64 {
        self.log_lr_total.exp()
    }

    pub fn total_count(&self) -> usize {
        self.per_sensor.iter().map(|s| s.count).sum()
    }
}

/// Sorts `(sensor, log_lr)` entries by sensor id, rejects duplicates and sums
/// the values pairwise in that order.
pub fn sum_by_sensor(entries: &mut [(u32, f64)]) -> Result<f64> {
    entries.sort_by_key(|e| e.0);
    if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::input(format!("duplicate statistic for sensor {}", w[0].0)));
    }
    let values: Vec<f64> = entries.iter().map(|e| e.1).collect();
    Ok(pairwise_sum(&values))
}

pub fn fuse(stats: &[LocalStatistic]) -> Result<FusedStatistic> {
    let mut per_sensor = stats.to_vec();
    per_sensor.sort_by_key(|s| s.sensor);
    let mut entries: Vec<(u32, f64)> = per_sensor.iter().map(|s| (s.sensor, s.log_lr)).collect();
    let log_lr_total = sum_by_sensor(&mut entries)?;
    Ok(FusedStatistic {
        log_lr_total,
        per_sensor,
    })
}

/// [`fuse`], additionally requiring exactly one statistic per roster entry.
pub fn fuse_roster(stats: &[LocalStatistic], roster: &[u32]) -> Result<FusedStatistic> {
    let fused = fuse(stats)?;
    let mut expected = roster.to_vec();
    expected.sort_unstable();
    let got: Vec<u32> = fused.per_sensor.iter().map(|s| s.sensor).collect();
    if got != expected {
        return Err(Error::input(format!("statistics for sensors {got:?}, expected {expected:?}")));
    }
    Ok(fused)
}

/// Log-likelihood ratio of a centralized detector holding every raw path.
/// The pooled events are processed in time order and credited to the sensor
/// that saw them; the per-sensor totals are then added in ascending id order.
/// Keeping the per-sensor grouping makes the result reproduce the fused value
/// to the last bit, which a single running sum over ~10⁴-sized statistics
/// cannot (one ulp there is about 2·10⁻¹²).
pub fn centralized_log_lr(scenario: &Scenario, paths: &[EventPath]) -> Result<f64> {
    let sensors = scenario.sensors();
    if paths.len() != sensors.len() {
        return Err(Error::input(format!("{} paths for {} sensors", paths.len(), sensors.len())));
    }
    let horizon = scenario.horizon();
    let mut accs = Vec::with_capacity(sensors.len());
    let mut events = Vec::new();
    for (slot, (sensor, path)) in sensors.iter().zip(paths).enumerate() {
        if path.horizon() != horizon {
            return Err(Error::input("path horizon does not match scenario horizon"));
        }
        let mut acc = CompensatedSum::new();
        acc.add(-sensor.source().integrate(0.0, horizon)?.value);
        accs.push(acc);
        events.extend(path.jump_times().iter().map(|&t| (t, slot)));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (t, slot) in events {
        accs[slot].add(jump_log_factor(&sensors[slot], t)?);
    }
    let mut totals: Vec<(u32, f64)> = sensors.iter().zip(&accs).map(|(s, a)| (s.id(), a.value())).collect();
    sum_by_sensor(&mut totals)
}

/// `(log ℓ⁻, log ℓ⁺)` with `log ℓ± = −J + (Σ counts) · log(C or D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub log_lower: f64,
    pub log_upper: f64,
}

impl Envelope {
    pub fn contains(&self, log_lr: f64, slack: f64) -> bool {
        self.log_lower - slack <= log_lr && log_lr <= self.log_upper + slack
    }
}

pub fn pathwise_envelope(counts: &[u64], constants: &ScenarioConstants) -> Envelope {
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    Envelope {
        log_lower: -constants.expected_source + n * constants.ln_min_jump_factor(),
        log_upper: -constants.expected_source + n * constants.ln_max_jump_factor(),
    }
}
