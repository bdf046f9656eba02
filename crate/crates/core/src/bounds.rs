//! Poisson tail probabilities and the count-based bounds on detection and
//! false-alarm probabilities.
//!
//! The likelihood ratio is bracketed pathwise by `e^{−J} C^N ≤ L_T ≤ e^{−J} D^N`
//! with `N` the network-wide count, and `N` is Poisson with mean `B` under the
//! null and `J + B` under the alternative. Thresholding the envelope instead of
//! `L_T` turns both error probabilities into Poisson right tails:
//!
//! - detection `≥ P̄(J + B, ⌈(log γ + J) / log C⌉)`
//! - false alarm `≤ P̄(B, ⌈(log γ + J) / log D⌉)`

use std::ops::RangeInclusive;

use crate::scenario::{Scenario, ScenarioConstants};
use crate::special::{ln_gamma_pq, ln_power_term};
use crate::{Error, Result};

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::input(format!("Poisson mean must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// `ln p(λ, j)`.
pub fn ln_poisson_pmf(lambda: f64, j: u64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(ln_power_term(j as f64, lambda))
}

/// `p(λ, j) = e^{−λ} λ^j / j!`.
pub fn poisson_pmf(lambda: f64, j: u64) -> Result<f64> {
    Ok(ln_poisson_pmf(lambda, j)?.exp())
}

/// `ln P̄(λ, n)`, where `P̄(λ, n) = Σ_{j≥n} p(λ, j) = P(n, λ)`.
pub fn ln_poisson_right_tail(lambda: f64, n: u64) -> Result<f64> {
    check_lambda(lambda)?;
    if n == 0 {
        return Ok(0.0);
    }
    Ok(ln_gamma_pq(n as f64, lambda)?.0)
}

pub fn poisson_right_tail(lambda: f64, n: u64) -> Result<f64> {
    Ok(ln_poisson_right_tail(lambda, n)?.exp())
}

/// `ln P(λ, n)`, where `P(λ, n) = Σ_{j≤n} p(λ, j) = Q(n+1, λ)`.
pub fn ln_poisson_left_tail(lambda: f64, n: u64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(ln_gamma_pq(n as f64 + 1.0, lambda)?.1)
}

pub fn poisson_left_tail(lambda: f64, n: u64) -> Result<f64> {
    Ok(ln_poisson_left_tail(lambda, n)?.exp())
}

/// A validated `(λ, n)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailQuery {
    lambda: f64,
    n: u64,
}

impl TailQuery {
    pub fn new(lambda: f64, n: u64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { lambda, n })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn pmf(&self) -> f64 {
        ln_power_term(self.n as f64, self.lambda).exp()
    }

    pub fn right(&self) -> Result<f64> {
        poisson_right_tail(self.lambda, self.n)
    }

    pub fn left(&self) -> Result<f64> {
        poisson_left_tail(self.lambda, self.n)
    }
}

/// Smallest total count `m ≥ 0` with `m ≥ (log γ + J) / ln_factor`.
///
/// Returns `u64::MAX` when no finite count reaches the threshold (including
/// the degenerate `ln_factor = 0` with `log γ > −J`).
pub fn count_threshold(log_gamma: f64, expected_source: f64, ln_factor: f64) -> Result<u64> {
    if log_gamma.is_nan() || log_gamma == f64::INFINITY {
        if log_gamma == f64::INFINITY {
            return Ok(u64::MAX);
        }
        return Err(Error::input("log threshold is NaN"));
    }
    if !(ln_factor >= 0.0 && ln_factor.is_finite()) {
        return Err(Error::input(format!("jump factor must be >= 1, got ln = {ln_factor}")));
    }
    let excess = log_gamma + expected_source;
    if ln_factor == 0.0 {
        return Ok(if excess <= 0.0 { 0 } else { u64::MAX });
    }
    let arg = excess / ln_factor;
    if arg <= 0.0 {
        Ok(0)
    } else if arg >= 9.0e18 {
        Ok(u64::MAX)
    } else {
        Ok(arg.ceil() as u64)
    }
}

/// `P̄(J + B, ⌈(log γ + J) / log C⌉)`.
pub fn detection_lower_bound(constants: &ScenarioConstants, log_gamma: f64) -> Result<f64> {
    let n = count_threshold(log_gamma, constants.expected_source, constants.ln_min_jump_factor())?;
    poisson_right_tail(constants.expected_source + constants.expected_background, n)
}

/// `P̄(B, ⌈(log γ + J) / log D⌉)`.
pub fn false_alarm_upper_bound(constants: &ScenarioConstants, log_gamma: f64) -> Result<f64> {
    let n = count_threshold(log_gamma, constants.expected_source, constants.ln_max_jump_factor())?;
    poisson_right_tail(constants.expected_background, n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSummary {
    pub log_gamma: f64,
    /// `⌈(log γ + J) / log C⌉`.
    pub count_threshold_lower: u64,
    /// `⌈(log γ + J) / log D⌉`.
    pub count_threshold_upper: u64,
    pub detection_lower: f64,
    pub false_alarm_upper: f64,
}

impl BoundSummary {
    pub fn gamma(&self) -> f64 {
        self.log_gamma.exp()
    }
}

pub fn bound_summary(constants: &ScenarioConstants, log_gamma: f64) -> Result<BoundSummary> {
    let lower = count_threshold(log_gamma, constants.expected_source, constants.ln_min_jump_factor())?;
    let upper = count_threshold(log_gamma, constants.expected_source, constants.ln_max_jump_factor())?;
    Ok(BoundSummary {
        log_gamma,
        count_threshold_lower: lower,
        count_threshold_upper: upper,
        detection_lower: poisson_right_tail(constants.expected_source + constants.expected_background, lower)?,
        false_alarm_upper: poisson_right_tail(constants.expected_background, upper)?,
    })
}

/// How constants are formed for a truncated array in a sensor-count sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Keep the full array's background mass, jump factors and horizon; only
    /// the source mass is summed over the surviving sensors. Still a valid
    /// (looser) bound for the smaller network.
    FixedNetworkConstants,
    /// Recompute every constant from the surviving sensors.
    Recompute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sensors: usize,
    pub constants: ScenarioConstants,
    pub summary: BoundSummary,
}

/// Bounds at a fixed threshold for the arrays made of the first `k` sensors,
/// for each `k` in `sensors`.
pub fn sensor_count_sweep(
    scenario: &Scenario,
    log_gamma: f64,
    sensors: RangeInclusive<usize>,
    mode: SweepMode,
) -> Result<Vec<SweepRow>> {
    if sensors.is_empty() {
        return Err(Error::input("empty sensor-count range"));
    }
    let full = scenario.constants()?;
    sensors
        .map(|k| {
            let sub = scenario.truncated(k)?.constants()?;
            let constants = match mode {
                SweepMode::Recompute => sub,
                SweepMode::FixedNetworkConstants => ScenarioConstants {
                    expected_source: sub.expected_source,
                    ..full
                },
            };
            Ok(SweepRow {
                sensors: k,
                constants,
                summary: bound_summary(&constants, log_gamma)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::RateBounds;
    use std::f64::consts::E;

    fn toy_constants() -> ScenarioConstants {
        ScenarioConstants {
            horizon: 1.0,
            expected_background: 15.0,
            expected_source: 3.0,
            min_jump_factor: 1.2,
            max_jump_factor: 1.2,
            background_bounds: RateBounds { min: 5.0, max: 5.0 },
            source_bounds: RateBounds { min: 1.0, max: 1.0 },
        }
    }

    #[test]
    fn pmf_examples() {
        assert!((poisson_pmf(1.0, 0).unwrap() - 1.0 / E).abs() < 1e-16);
        let direct = (-5.0f64).exp() * 5f64.powi(5) / 120.0;
        assert!(((poisson_pmf(5.0, 5).unwrap() - direct) / direct).abs() < 1e-14);
        assert!(poisson_pmf(0.0, 1).is_err());
        assert!(poisson_pmf(f64::NAN, 1).is_err());
        // no overflow at the extremes
        let p = poisson_pmf(1e6, 10_000_000).unwrap();
        assert_eq!(p, 0.0);
        assert!(ln_poisson_pmf(1e6, 10_000_000).unwrap().is_finite());
        assert!(poisson_pmf(1e6, 1_000_000).unwrap() > 3.9e-4);
    }

    #[test]
    fn tail_examples() {
        assert_eq!(poisson_right_tail(3.7, 0).unwrap(), 1.0);
        assert!((poisson_right_tail(1.0, 2).unwrap() - (1.0 - 2.0 / E)).abs() < 1e-15);
        assert!((poisson_left_tail(1.0, 1).unwrap() - 2.0 / E).abs() < 1e-15);
        assert!((poisson_left_tail(5.0, 0).unwrap() - (-5.0f64).exp()).abs() < 1e-17);
        assert!((poisson_left_tail(1.0, 200).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn count_threshold_edges() {
        assert_eq!(count_threshold(f64::NEG_INFINITY, 5.0, 0.3).unwrap(), 0);
        assert_eq!(count_threshold(-10.0, 5.0, 0.3).unwrap(), 0);
        // exact integer argument stays put
        assert_eq!(count_threshold(1.0, 2.0, 0.5).unwrap(), 6);
        assert_eq!(count_threshold(1.1, 2.0, 0.5).unwrap(), 7);
        assert_eq!(count_threshold(1.0, 0.0, 0.0).unwrap(), u64::MAX);
        assert_eq!(count_threshold(-1.0, 0.0, 0.0).unwrap(), 0);
        assert!(count_threshold(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn vanishing_threshold_gives_trivial_bounds() {
        let c = toy_constants();
        let s = bound_summary(&c, f64::NEG_INFINITY).unwrap();
        assert_eq!(s.detection_lower, 1.0);
        assert_eq!(s.false_alarm_upper, 1.0);
        assert_eq!(detection_lower_bound(&c, (1e-300f64).ln()).unwrap(), 1.0);
    }

    #[test]
    fn equal_factors_make_thresholds_coincide() {
        let c = toy_constants();
        for lg in [-2.0, -0.5, 0.0, 1.3] {
            let s = bound_summary(&c, lg).unwrap();
            assert_eq!(s.count_threshold_lower, s.count_threshold_upper);
            let n = s.count_threshold_upper;
            assert_eq!(s.false_alarm_upper, poisson_right_tail(15.0, n).unwrap());
            assert_eq!(s.detection_lower, poisson_right_tail(18.0, n).unwrap());
        }
    }
}
