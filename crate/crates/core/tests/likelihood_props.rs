//! Local and fused log-likelihood ratios: closed forms, envelope, mean-one.

use npfusion::config::ScenarioConfig;
use npfusion::detector::{Hypothesis, TrialSeed};
use npfusion::intensity::IntensityModel;
use npfusion::likelihood::{centralized_log_lr, fuse, local_log_lr, pathwise_envelope, LocalStatistic};
use npfusion::montecarlo::Simulator;
use npfusion::poisson_sim::EventPath;
use npfusion::scenario::{Scenario, Sensor};
use proptest::prelude::*;

fn constant_sensor(beta: f64, nu: f64) -> Sensor {
    Sensor::new(1, IntensityModel::constant(beta), IntensityModel::constant(nu))
}

#[test]
fn constant_rate_closed_form() {
    let s = constant_sensor(5.0, 1.0);
    let path = EventPath::new(1.0, vec![0.3, 0.7]).unwrap();
    let st = local_log_lr(&path, &s, 1.0).unwrap();
    assert!((st.log_lr - (-1.0 + 2.0 * 1.2f64.ln())).abs() < 1e-15);
    assert!((st.log_lr + 0.635_356_886_412_090_8).abs() < 1e-12);
    assert_eq!(st.count, 2);
}

#[test]
fn empty_path_gives_minus_source_mass() {
    let sc = ScenarioConfig::paper_sec6().build().unwrap();
    let st = local_log_lr(&EventPath::empty(sc.horizon()).unwrap(), sc.sensor(1).unwrap(), sc.horizon()).unwrap();
    assert_eq!(st.log_lr, -sc.integrated_source_intensity(1).unwrap());
    assert!((st.log_lr + 251.033_002_244_277_26).abs() < 1e-9);
}

#[test]
fn horizon_mismatch_rejected() {
    let s = constant_sensor(5.0, 1.0);
    assert!(local_log_lr(&EventPath::new(2.0, vec![1.5]).unwrap(), &s, 1.0).is_err());
}

#[test]
fn fuse_arithmetic_and_duplicates() {
    let stat = |sensor, log_lr| LocalStatistic {
        sensor,
        log_lr,
        count: 0,
        integrated_source: 0.0,
        integration: npfusion::intensity::IntegrationMethod::ClosedForm,
    };
    let f = fuse(&[stat(2, 2.5), stat(1, -1.0), stat(3, 0.5)]).unwrap();
    assert_eq!(f.log_lr_total, 2.0);
    assert_eq!(fuse(&[stat(1, 0.0), stat(2, 0.0)]).unwrap().log_lr_total, 0.0);
    assert!(fuse(&[stat(1, 0.0), stat(1, 1.0)]).is_err());
}

#[test]
fn envelope_examples() {
    let c = ScenarioConfig::paper_sec6().build().unwrap().constants().unwrap();
    let e = pathwise_envelope(&[0; 10], &c);
    assert_eq!(e.log_lower, -c.expected_source);
    assert_eq!(e.log_upper, -c.expected_source);
    let mut counts = [33u64; 10];
    counts[0] = 41;
    let e = pathwise_envelope(&counts, &c);
    let want = -c.expected_source + 338.0 * c.max_jump_factor.ln();
    assert!((e.log_upper - want).abs() < 1e-9);
    // with D = 1935.24 the 338-count envelope sits at log 0.1718
    assert!((e.log_upper - 0.1718f64.ln()).abs() < 1e-3, "{}", e.log_upper);
    let toy = ScenarioConfig::toy_constant(3).build().unwrap().constants().unwrap();
    let e = pathwise_envelope(&[1, 4, 2], &toy);
    assert_eq!(e.log_lower, e.log_upper);
}

fn envelope_violations(sc: &Scenario, trials: u32, seed: u64) -> usize {
    let sim = Simulator::new(sc).unwrap();
    let c = sc.constants().unwrap();
    let mut bad = 0;
    for hyp in [Hypothesis::H0, Hypothesis::H1] {
        for t in sim.trials(hyp, trials, seed).unwrap() {
            if !pathwise_envelope(&t.counts, &c).contains(t.log_lr, 1e-9) {
                bad += 1;
            }
        }
    }
    bad
}

#[test]
fn envelope_contains_simulated_statistics() {
    assert_eq!(envelope_violations(&ScenarioConfig::paper_sec6().build().unwrap(), 300, 1), 0);
    assert_eq!(envelope_violations(&ScenarioConfig::toy_inhomogeneous().build().unwrap(), 2000, 2), 0);
    assert_eq!(envelope_violations(&ScenarioConfig::toy_constant(3).build().unwrap(), 2000, 3), 0);
}

#[test]
fn likelihood_ratio_has_mean_one_under_null() {
    let sc = ScenarioConfig::toy_constant(1).build().unwrap();
    let sim = Simulator::new(&sc).unwrap();
    let n = 20_000u32;
    let lr: Vec<f64> = sim.trials(Hypothesis::H0, n, 77).unwrap().iter().map(|t| t.log_lr.exp()).collect();
    let m = npfusion::stats::mean(&lr);
    let tol = 4.0 * ((0.2f64).exp_m1() / f64::from(n)).sqrt();
    assert!((m - 1.0).abs() <= tol, "mean {m}, tolerance {tol}");
}

/// One compensated running sum over all pooled events, no per-sensor grouping.
fn single_pass_log_lr(sc: &Scenario, paths: &[EventPath]) -> f64 {
    let mut acc = npfusion::summation::CompensatedSum::new();
    let mut events = Vec::new();
    for (s, p) in sc.sensors().iter().zip(paths) {
        acc.add(-s.source().integrate(0.0, sc.horizon()).unwrap().value);
        events.extend(p.jump_times().iter().map(|&t| (t, s)));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (t, s) in events {
        acc.add(npfusion::likelihood::jump_log_factor(s, t).unwrap());
    }
    acc.value()
}

#[test]
fn fused_equals_centralized_on_sec6_paths() {
    let sc = ScenarioConfig::paper_sec6().build().unwrap();
    let sim = Simulator::new(&sc).unwrap();
    for hyp in [Hypothesis::H0, Hypothesis::H1] {
        for i in 0..50 {
            let seed = TrialSeed::new(123, i);
            let paths: Vec<EventPath> = sc.sensors().iter().map(|s| sim.sensor_path(s.id(), hyp, seed).unwrap()).collect();
            let fused = sim.trial(hyp, seed).unwrap().log_lr;
            let pooled = centralized_log_lr(&sc, &paths).unwrap();
            assert!((fused - pooled).abs() <= 1e-12, "{hyp} trial {i}: {fused} vs {pooled}");
            let single = single_pass_log_lr(&sc, &paths);
            assert!((fused - single).abs() <= 1e-14 * fused.abs().max(1.0), "{hyp} trial {i}: {fused} vs {single}");
        }
    }
}

proptest! {
    #[test]
    fn absent_source_gives_unit_ratio(times in prop::collection::btree_set(1u32..1_000_000, 0..40)) {
        let s = constant_sensor(3.0, 0.0);
        let path = EventPath::new(1.0, times.iter().map(|&t| f64::from(t) / 1e6).collect()).unwrap();
        prop_assert_eq!(local_log_lr(&path, &s, 1.0).unwrap().log_lr, 0.0);
    }

    #[test]
    fn adding_a_jump_raises_log_lr(
        times in prop::collection::btree_set(1u32..1_000_000, 0..30),
        extra in 1u32..1_000_000,
    ) {
        prop_assume!(!times.contains(&extra));
        let sc = ScenarioConfig::toy_inhomogeneous().build().unwrap();
        let s = sc.sensor(1).unwrap();
        let horizon = sc.horizon();
        let to_t = |u: u32| f64::from(u) / 1e6 * horizon;
        let base: Vec<f64> = times.iter().map(|&u| to_t(u)).collect();
        let mut more = base.clone();
        more.push(to_t(extra));
        more.sort_by(f64::total_cmp);
        let a = local_log_lr(&EventPath::new(horizon, base).unwrap(), s, horizon).unwrap().log_lr;
        let b = local_log_lr(&EventPath::new(horizon, more).unwrap(), s, horizon).unwrap().log_lr;
        let t = to_t(extra);
        let step = (s.source().rate(t) / s.background().rate(t)).ln_1p();
        prop_assert!(b > a);
        prop_assert!((b - a - step).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}
