//! Fused decision rule, threshold calibration and error-rate estimation.
//!
//! The fusion center alarms on `{log L_T ≥ log γ}`; a tie alarms. Thresholds
//! come either from Monte Carlo under the null (conservative empirical
//! quantile) or from inverting the analytic false-alarm bound.

use log::warn;

use crate::bounds::{count_threshold, ln_poisson_right_tail};
use crate::likelihood::FusedStatistic;
use crate::montecarlo::{Simulator, TrialStatistic};
use crate::scenario::{Scenario, ScenarioConstants};
use crate::{Error, Result};

pub use crate::montecarlo::{Hypothesis, TrialSeed};

/// Minimum number of trials accepted by the Monte Carlo routines.
pub const MIN_TRIALS: u32 = 10;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub log_lr_total: f64,
    pub log_gamma: f64,
    pub decision: Hypothesis,
    /// Generating hypothesis, when known (simulation).
    pub truth: Option<Hypothesis>,
    pub seed: Option<TrialSeed>,
}

impl DecisionRecord {
    pub fn alarm(&self) -> bool {
        self.decision == Hypothesis::H1
    }
}

/// `H1` iff `log_lr_total ≥ log_gamma`.
pub fn decide_log_lr(log_lr_total: f64, log_gamma: f64) -> DecisionRecord {
    let decision = if log_lr_total >= log_gamma {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    };
    DecisionRecord {
        log_lr_total,
        log_gamma,
        decision,
        truth: None,
        seed: None,
    }
}

pub fn decide(fused: &FusedStatistic, log_gamma: f64) -> DecisionRecord {
    decide_log_lr(fused.log_lr_total, log_gamma)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::input(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn check_trials(trials: u32) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::input(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

/// Smallest sample value `v` such that the fraction of samples `≥ v` is at
/// most `alpha`, with that fraction. When even the maximum is too frequent,
/// the threshold is placed just above it.
pub fn conservative_threshold(samples: &[f64], alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if samples.is_empty() || samples.iter().any(|v| v.is_nan()) {
        return Err(Error::input("threshold needs a non-empty sample without NaN"));
    }
    let mut desc = samples.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let n = desc.len();
    let max_alarms = (alpha * n as f64).floor() as usize;
    let threshold = if max_alarms == 0 {
        desc[0].next_up()
    } else {
        // the (max_alarms+1)-th largest value must not alarm
        let blocked = desc[max_alarms];
        match desc[..max_alarms].iter().rposition(|&v| v > blocked) {
            Some(j) => desc[j],
            None => desc[0].next_up(),
        }
    };
    let alarms = desc.iter().take_while(|&&v| v >= threshold).count();
    Ok((threshold, alarms as f64 / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCalibration {
    pub log_gamma: f64,
    /// Fraction of the calibration sample at or above `log_gamma` (≤ α).
    pub empirical_pfa: f64,
    pub trials: u32,
    /// False when `trials < 100/α`: too few null samples above the threshold
    /// for the quantile to be trusted.
    pub reliable: bool,
}

/// Empirical `(1 − α)` quantile of `log L_T` under the null, chosen so the
/// estimated false-alarm rate does not exceed `alpha`. Deterministic in `seed`.
pub fn calibrate_threshold_mc(scenario: &Scenario, alpha: f64, trials: u32, seed: u64) -> Result<McCalibration> {
    check_alpha(alpha)?;
    check_trials(trials)?;
    let reliable = f64::from(trials) >= 100.0 / alpha;
    if !reliable {
        warn!(
            "{trials} trials for alpha = {alpha:e}: fewer than 100/alpha, threshold estimate is unreliable"
        );
    }
    let sim = Simulator::new(scenario)?;
    let samples: Vec<f64> = sim
        .trials(Hypothesis::H0, trials, seed)?
        .into_iter()
        .map(|t| t.log_lr)
        .collect();
    let (log_gamma, empirical_pfa) = conservative_threshold(&samples, alpha)?;
    Ok(McCalibration {
        log_gamma,
        empirical_pfa,
        trials,
        reliable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCalibration {
    pub log_gamma: f64,
    /// Smallest `n` with `P̄(B, n) ≤ α`.
    pub count_threshold: u64,
    /// `P̄(B, n*)`, never above `α`.
    pub achieved_bound: f64,
}

/// Threshold from the false-alarm bound: `n*` is the smallest count with
/// `P̄(B, n*) ≤ α` and `log γ = n* · log D − J`, so the bound's ceiling
/// argument is exactly `n*`.
pub fn calibrate_threshold_bound(constants: &ScenarioConstants, alpha: f64) -> Result<BoundCalibration> {
    check_alpha(alpha)?;
    let ln_d = constants.ln_max_jump_factor();
    if !(ln_d > 0.0) {
        return Err(Error::input("max jump factor is 1: the count bound cannot be inverted"));
    }
    let lambda = constants.expected_background;
    let ln_alpha = alpha.ln();
    let below = |n: u64| -> Result<bool> { Ok(ln_poisson_right_tail(lambda, n)? <= ln_alpha) };

    let mut hi = (lambda.ceil() as u64).max(1);
    while !below(hi)? {
        hi = hi.checked_mul(2).ok_or_else(|| Error::model("count threshold search overflowed"))?;
    }
    let mut lo = 0u64; // P̄(λ, 0) = 1 > α
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let n_star = hi;

    let j = constants.expected_source;
    let mut log_gamma = n_star as f64 * ln_d - j;
    for _ in 0..256 {
        match count_threshold(log_gamma, j, ln_d)?.cmp(&n_star) {
            std::cmp::Ordering::Greater => log_gamma = log_gamma.next_down(),
            std::cmp::Ordering::Less => log_gamma = log_gamma.next_up(),
            std::cmp::Ordering::Equal => break,
        }
    }
    let reached = count_threshold(log_gamma, j, ln_d)?;
    if reached != n_star {
        return Err(Error::model(format!("could not place threshold at count {n_star} (got {reached})")));
    }
    let achieved_bound = ln_poisson_right_tail(lambda, n_star)?.exp();
    debug_assert!(achieved_bound <= alpha);
    Ok(BoundCalibration {
        log_gamma,
        count_threshold: n_star,
        achieved_bound,
    })
}

/// Bernoulli rate estimate with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub value: f64,
    pub half_width: f64,
    pub hits: u64,
    pub trials: u64,
}

impl RateEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p = hits as f64 / n;
        Self {
            value: p,
            half_width: Z95 * (p * (1.0 - p) / n).sqrt(),
            hits,
            trials,
        }
    }

    /// Standard error `sqrt(p(1−p)/n)`.
    pub fn std_error(&self) -> f64 {
        self.half_width / Z95
    }

    /// Rule of thumb: at least five hits and five misses.
    pub fn normal_approximation_ok(&self) -> bool {
        self.hits >= 5 && self.trials - self.hits >= 5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub pfa: RateEstimate,
    pub pd: RateEstimate,
    pub trials: u32,
}

impl ErrorEstimate {
    /// False when either half-width rests on too few hits or misses.
    pub fn normal_approximation_ok(&self) -> bool {
        self.pfa.normal_approximation_ok() && self.pd.normal_approximation_ok()
    }
}

fn alarms(samples: &[TrialStatistic], log_gamma: f64) -> u64 {
    samples.iter().filter(|t| t.log_lr >= log_gamma).count() as u64
}

/// Fractions of null and alternative trials that alarm at `log_gamma`.
pub fn estimate_error_rates(scenario: &Scenario, log_gamma: f64, trials: u32, seed: u64) -> Result<ErrorEstimate> {
    check_trials(trials)?;
    if log_gamma.is_nan() {
        return Err(Error::input("log threshold is NaN"));
    }
    let sim = Simulator::new(scenario)?;
    let h0 = sim.trials(Hypothesis::H0, trials, seed)?;
    let h1 = sim.trials(Hypothesis::H1, trials, seed)?;
    Ok(ErrorEstimate {
        pfa: RateEstimate::from_counts(alarms(&h0, log_gamma), u64::from(trials)),
        pd: RateEstimate::from_counts(alarms(&h1, log_gamma), u64::from(trials)),
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub log_gamma: f64,
    pub pfa: f64,
    pub pd: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::input("threshold grid is empty"));
    }
    if grid.iter().any(|g| g.is_nan()) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::input("threshold grid must be strictly increasing"));
    }
    Ok(())
}

/// ROC points for a test statistic given its null and alternative samples.
/// Every grid point reuses the same samples.
pub fn roc_from_samples(null: &[f64], alternative: &[f64], grid: &[f64]) -> Result<Vec<RocPoint>> {
    check_grid(grid)?;
    if null.is_empty() || alternative.is_empty() {
        return Err(Error::input("ROC needs non-empty samples"));
    }
    let rate = |xs: &[f64], g: f64| xs.iter().filter(|&&x| x >= g).count() as f64 / xs.len() as f64;
    Ok(grid
        .iter()
        .map(|&g| RocPoint {
            log_gamma: g,
            pfa: rate(null, g),
            pd: rate(alternative, g),
        })
        .collect())
}

/// Monte Carlo ROC over a strictly increasing grid of log thresholds, with
/// common random numbers across the grid.
pub fn roc_curve(scenario: &Scenario, grid: &[f64], trials: u32, seed: u64) -> Result<Vec<RocPoint>> {
    check_grid(grid)?;
    check_trials(trials)?;
    let sim = Simulator::new(scenario)?;
    let null: Vec<f64> = sim.trials(Hypothesis::H0, trials, seed)?.iter().map(|t| t.log_lr).collect();
    let alt: Vec<f64> = sim.trials(Hypothesis::H1, trials, seed)?.iter().map(|t| t.log_lr).collect();
    roc_from_samples(&null, &alt, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    #[test]
    fn decision_boundary_alarms() {
        assert_eq!(decide_log_lr(0.0, 0.0).decision, Hypothesis::H1);
        assert_eq!(decide_log_lr(-1.80, 0.1718f64.ln()).decision, Hypothesis::H0);
        assert_eq!(decide_log_lr(5.0, 0.1718f64.ln()).decision, Hypothesis::H1);
        assert!(decide_log_lr(-1e300, f64::NEG_INFINITY).alarm());
        assert!(!decide_log_lr(1e300, f64::INFINITY).alarm());
    }

    #[test]
    fn conservative_threshold_handles_ties() {
        let xs = [1.0, 2.0, 2.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let (t, pfa) = conservative_threshold(&xs, 0.5).unwrap();
        assert_eq!((t, pfa), (4.0, 0.5));
        // 7 of 10 are >= 2; limit 0.75 -> 2.0 allowed? floor(7.5) = 7 alarms max
        let (t, pfa) = conservative_threshold(&xs, 0.75).unwrap();
        assert_eq!((t, pfa), (3.0, 0.6));
        let (t, pfa) = conservative_threshold(&xs, 0.05).unwrap();
        assert!(t > 8.0 && pfa == 0.0);
        assert!(conservative_threshold(&[], 0.5).is_err());
        assert!(conservative_threshold(&xs, 1.0).is_err());
    }

    #[test]
    fn input_validation() {
        let sc = ScenarioConfig::toy_constant(1).build().unwrap();
        assert!(calibrate_threshold_mc(&sc, 0.0, 100, 1).is_err());
        assert!(calibrate_threshold_mc(&sc, 0.5, 9, 1).is_err());
        assert!(estimate_error_rates(&sc, 0.0, 5, 1).is_err());
        assert!(roc_curve(&sc, &[], 100, 1).is_err());
        assert!(roc_curve(&sc, &[1.0, 1.0], 100, 1).is_err());
    }

    #[test]
    fn few_trials_flagged_unreliable() {
        let sc = ScenarioConfig::toy_constant(1).build().unwrap();
        let cal = calibrate_threshold_mc(&sc, 1e-6, 10_000, 3).unwrap();
        assert!(!cal.reliable);
        assert_eq!(cal.empirical_pfa, 0.0);
        assert!(calibrate_threshold_mc(&sc, 0.5, 1000, 3).unwrap().reliable);
    }

    #[test]
    fn infinite_thresholds() {
        let sc = ScenarioConfig::toy_constant(3).build().unwrap();
        let lo = estimate_error_rates(&sc, f64::NEG_INFINITY, 200, 4).unwrap();
        assert_eq!((lo.pfa.value, lo.pd.value), (1.0, 1.0));
        let hi = estimate_error_rates(&sc, f64::INFINITY, 200, 4).unwrap();
        assert_eq!((hi.pfa.value, hi.pd.value), (0.0, 0.0));
        assert!(!hi.normal_approximation_ok());
        let roc = roc_curve(&sc, &[f64::NEG_INFINITY], 100, 4).unwrap();
        assert_eq!((roc[0].pfa, roc[0].pd), (1.0, 1.0));
    }

    #[test]
    fn bound_calibration_meets_alpha() {
        let c = ScenarioConfig::toy_constant(3).build().unwrap().constants().unwrap();
        for alpha in [0.999, 0.5, 0.05, 1e-3, 1e-9] {
            let cal = calibrate_threshold_bound(&c, alpha).unwrap();
            assert!(cal.achieved_bound <= alpha);
            let prev = crate::bounds::poisson_right_tail(c.expected_background, cal.count_threshold - 1).unwrap();
            assert!(prev > alpha);
            let n = count_threshold(cal.log_gamma, c.expected_source, c.ln_max_jump_factor()).unwrap();
            assert_eq!(n, cal.count_threshold);
        }
    }
}
