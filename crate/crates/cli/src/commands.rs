//! Subcommand implementations.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use npfusion::bounds::{bound_summary, count_threshold, sensor_count_sweep, SweepMode};
use npfusion::config::ScenarioConfig;
use npfusion::detector::{
    calibrate_threshold_bound, calibrate_threshold_mc, roc_curve, Hypothesis, RateEstimate, TrialSeed,
};
use npfusion::intensity::IntegrationMethod;
use npfusion::network::{Network, NodeSchedule, TrialOptions, TransportKind};
use npfusion::scenario::{Scenario, ScenarioConstants};
use serde_json::json;

use crate::cli::{
    BoundsArgs, CalibrateArgs, Format, HypothesisArg, Method, RocArgs, ScenarioArgs, SimulateArgs, Source,
    Threshold, TransportArg,
};
use crate::output::{emit, fmt_float, sha256_hex, Cell, RunManifest, Table};
use crate::CliError;

pub const DEFAULT_PRESET: &str = "paper-sec6";

struct Loaded {
    scenario: Scenario,
    label: String,
    preset: Option<String>,
    config_sha256: Option<String>,
}

fn load(source: &Source) -> Result<Loaded, CliError> {
    match (&source.preset, &source.config) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
            let cfg = ScenarioConfig::from_toml_str(&text)?;
            Ok(Loaded {
                scenario: cfg.build()?,
                label: path.display().to_string(),
                preset: None,
                config_sha256: Some(sha256_hex(text.as_bytes())),
            })
        }
        (preset, None) => {
            let name = preset.as_deref().unwrap_or(DEFAULT_PRESET);
            Ok(Loaded {
                scenario: ScenarioConfig::preset(name)?.build()?,
                label: format!("preset:{name}"),
                preset: Some(name.to_string()),
                config_sha256: None,
            })
        }
    }
}

fn check_gamma(gamma: f64) -> Result<f64, CliError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(CliError::usage(format!("--gamma must be a positive finite number, got {gamma}")));
    }
    Ok(gamma.ln())
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::usage(format!("--alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// The log threshold selected by `--gamma`, `--log-gamma` or `--alpha`.
fn resolve_threshold(t: &Threshold, constants: &ScenarioConstants) -> Result<f64, CliError> {
    match (t.gamma, t.log_gamma, t.alpha) {
        (Some(g), _, _) => check_gamma(g),
        (_, Some(lg), _) if lg.is_nan() => Err(CliError::usage("--log-gamma is NaN")),
        (_, Some(lg), _) => Ok(lg),
        (_, _, Some(a)) => {
            check_alpha(a)?;
            Ok(calibrate_threshold_bound(constants, a)?.log_gamma)
        }
        _ => Err(CliError::usage("give a threshold with --gamma, --log-gamma or --alpha")),
    }
}

fn parse_range(text: &str) -> Result<RangeInclusive<usize>, CliError> {
    let bad = || CliError::usage(format!("--sweep-k expects `a:b` with 1 <= a <= b, got `{text}`"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::usage(format!("--grid expects `start:stop:points` with start < stop, points >= 2, got `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(start.is_finite() && stop.is_finite() && start < stop) || points < 2 {
        return Err(bad());
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i + 1 == points { stop } else { start + step * i as f64 })
        .collect())
}

/// Values quoted alongside a built-in preset, checked against what the
/// model computes.
struct Quoted {
    name: &'static str,
    quoted: f64,
    tolerance: f64,
}

const REFERENCE_GAMMA: f64 = 0.1718;

fn quoted_values(preset: Option<&str>) -> Vec<Quoted> {
    match preset {
        Some("paper-sec6") => vec![
            Quoted { name: "T_s", quoted: 6.294, tolerance: 1e-3 },
            Quoted { name: "B_counts", quoted: 4387.0 / 17.0, tolerance: 1e-2 },
            Quoted { name: "J_counts", quoted: 2559.74, tolerance: 5e-2 },
            Quoted { name: "C_minus_1", quoted: 5.97e-3, tolerance: 5e-5 },
            Quoted { name: "D_minus_1", quoted: 935.24, tolerance: 0.5 },
            Quoted { name: "count_threshold_D_at_gamma_0.1718", quoted: 338.0, tolerance: 0.0 },
        ],
        _ => Vec::new(),
    }
}

fn computed_value(name: &str, c: &ScenarioConstants) -> Result<f64, CliError> {
    Ok(match name {
        "T_s" => c.horizon,
        "B_counts" => c.expected_background,
        "J_counts" => c.expected_source,
        "C_minus_1" => c.min_jump_factor - 1.0,
        "D_minus_1" => c.max_jump_factor - 1.0,
        "count_threshold_D_at_gamma_0.1718" => {
            count_threshold(REFERENCE_GAMMA.ln(), c.expected_source, c.ln_max_jump_factor())? as f64
        }
        other => unreachable!("no computed value for {other}"),
    })
}

fn method_label(m: IntegrationMethod) -> &'static str {
    match m {
        IntegrationMethod::ClosedForm => "closed-form",
        IntegrationMethod::Quadrature => "quadrature",
    }
}

pub fn scenario(args: &ScenarioArgs) -> Result<(), CliError> {
    let loaded = load(&args.source)?;
    let sc = &loaded.scenario;
    let c = sc.constants()?;
    let log_gamma = args.gamma.map(check_gamma).transpose()?;
    let integrals = sc.source_integrals()?;

    let mut checks = Vec::new();
    for q in quoted_values(loaded.preset.as_deref()) {
        let computed = computed_value(q.name, &c)?;
        let consistent = (computed - q.quoted).abs() <= q.tolerance;
        checks.push((q, computed, consistent));
    }
    let ratio_d = |lg: f64| (lg + c.expected_source) / c.ln_max_jump_factor();

    let format = args.output.format.unwrap_or(Format::Text);
    let body = match format {
        Format::Json => {
            let sensors: Vec<_> = sc
                .sensors()
                .iter()
                .zip(&integrals)
                .map(|(s, (id, value, method))| {
                    json!({
                        "id": id,
                        "position_m": s.position(),
                        "integrated_source_counts": value,
                        "integration": method_label(*method),
                    })
                })
                .collect();
            let mut obj = json!({
                "source": loaded.label,
                "sensors": sc.sensor_count(),
                "T_s": c.horizon,
                "B_counts": c.expected_background,
                "J_counts": c.expected_source,
                "C": c.min_jump_factor,
                "C_minus_1": c.min_jump_factor - 1.0,
                "D": c.max_jump_factor,
                "D_minus_1": c.max_jump_factor - 1.0,
                "per_sensor": sensors,
                "reference_checks": checks.iter().map(|(q, computed, ok)| json!({
                    "name": q.name,
                    "quoted": q.quoted,
                    "computed": computed,
                    "tolerance": q.tolerance,
                    "consistent": ok,
                })).collect::<Vec<_>>(),
            });
            if let Some(lg) = log_gamma {
                let s = bound_summary(&c, lg)?;
                obj["gamma"] = json!(lg.exp());
                obj["log_gamma"] = json!(lg);
                obj["count_ratio_D"] = json!(ratio_d(lg));
                obj["count_threshold_C"] = json!(s.count_threshold_lower);
                obj["count_threshold_D"] = json!(s.count_threshold_upper);
            }
            obj.to_string() + "\n"
        }
        Format::Csv => {
            let mut t = Table::new(vec!["sensor", "position_m", "integrated_source_counts", "integration"]);
            for (s, (id, value, method)) in sc.sensors().iter().zip(&integrals) {
                let pos = s.position().map_or(Cell::Text(String::new()), Cell::Float);
                t.push(vec![(*id).into(), pos, (*value).into(), method_label(*method).into()]);
            }
            t.render(Format::Csv)
        }
        Format::Text => {
            let mut out = String::new();
            let w = &mut out;
            let _ = writeln!(w, "source: {}", loaded.label);
            let _ = writeln!(w, "sensors: {}", sc.sensor_count());
            let _ = writeln!(w, "T_s = {}", fmt_float(c.horizon));
            let _ = writeln!(w, "B_counts = {}", fmt_float(c.expected_background));
            let _ = writeln!(w, "J_counts = {}", fmt_float(c.expected_source));
            let _ = writeln!(w, "C = {}", fmt_float(c.min_jump_factor));
            let _ = writeln!(w, "C_minus_1 = {}", fmt_float(c.min_jump_factor - 1.0));
            let _ = writeln!(w, "D = {}", fmt_float(c.max_jump_factor));
            let _ = writeln!(w, "D_minus_1 = {}", fmt_float(c.max_jump_factor - 1.0));
            if let Some(lg) = log_gamma {
                let s = bound_summary(&c, lg)?;
                let _ = writeln!(w, "gamma = {}", fmt_float(lg.exp()));
                let _ = writeln!(w, "count_ratio_D = {}", fmt_float(ratio_d(lg)));
                let _ = writeln!(w, "count_threshold_C = {}", s.count_threshold_lower);
                let _ = writeln!(w, "count_threshold_D = {}", s.count_threshold_upper);
            }
            let _ = writeln!(w, "per-sensor source integrals:");
            for (id, value, method) in &integrals {
                let _ = writeln!(w, "  sensor {id}: {} counts ({})", fmt_float(*value), method_label(*method));
            }
            if !checks.is_empty() {
                let _ = writeln!(w, "reference checks:");
                for (q, computed, ok) in &checks {
                    let verdict = if *ok { "consistent" } else { "INCONSISTENT" };
                    let _ = writeln!(
                        w,
                        "  {}: quoted {} computed {} (tolerance {}) {verdict}",
                        q.name,
                        fmt_float(q.quoted),
                        fmt_float(*computed),
                        fmt_float(q.tolerance)
                    );
                }
            }
            out
        }
    };
    emit(&body, args.output.out.as_deref(), RunManifest::new("scenario", loaded.label, loaded.config_sha256))
}

pub fn bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let loaded = load(&args.source)?;
    let sc = &loaded.scenario;
    let c = sc.constants()?;
    let log_gamma = resolve_threshold(&args.threshold, &c)?;
    let mut t = Table::new(vec![
        "k",
        "gamma",
        "count_threshold_C",
        "count_threshold_D",
        "detection_lower",
        "false_alarm_upper",
    ]);
    let mut push = |k: usize, s: npfusion::bounds::BoundSummary| {
        t.push(vec![
            k.into(),
            s.gamma().into(),
            s.count_threshold_lower.into(),
            s.count_threshold_upper.into(),
            s.detection_lower.into(),
            s.false_alarm_upper.into(),
        ])
    };
    match &args.sweep_k {
        None => push(sc.sensor_count(), bound_summary(&c, log_gamma)?),
        Some(range) => {
            let range = parse_range(range)?;
            if *range.end() > sc.sensor_count() {
                return Err(CliError::usage(format!(
                    "--sweep-k upper end {} exceeds the {} sensors",
                    range.end(),
                    sc.sensor_count()
                )));
            }
            let mode = if args.sweep_recompute {
                SweepMode::Recompute
            } else {
                SweepMode::FixedNetworkConstants
            };
            for row in sensor_count_sweep(sc, log_gamma, range, mode)? {
                push(row.sensors, row.summary);
            }
        }
    }
    let format = args.output.format.unwrap_or(Format::Csv);
    emit(
        &t.render(format),
        args.output.out.as_deref(),
        RunManifest::new("bounds", loaded.label, loaded.config_sha256),
    )
}

fn hypotheses(arg: HypothesisArg) -> Vec<Hypothesis> {
    match arg {
        HypothesisArg::H0 => vec![Hypothesis::H0],
        HypothesisArg::H1 => vec![Hypothesis::H1],
        HypothesisArg::Both => vec![Hypothesis::H0, Hypothesis::H1],
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    let loaded = load(&args.source)?;
    let c = loaded.scenario.constants()?;
    let log_gamma = resolve_threshold(&args.threshold, &c)?;
    let net = if args.dropout.is_empty() {
        Network::new(&loaded.scenario)?
    } else {
        Network::with_dropout(&loaded.scenario, &args.dropout)?
    };
    let options = TrialOptions {
        transport: match args.transport {
            TransportArg::Channel => TransportKind::Channel,
            TransportArg::Tcp => TransportKind::Tcp,
        },
        schedule: NodeSchedule::Parallel,
    };
    let mut t = Table::new(vec!["trial_id", "hypothesis", "log_lr_total", "sum_counts", "decision"]);
    let mut summary = Vec::new();
    for hyp in hypotheses(args.hypothesis) {
        let outcomes = match options.transport {
            TransportKind::Channel => net.run_trials(hyp, log_gamma, args.trials, args.seed)?,
            TransportKind::Tcp => (0..args.trials)
                .map(|i| net.run_trial_with(hyp, log_gamma, TrialSeed::new(args.seed, i), &options))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let mut alarms = 0u64;
        for o in &outcomes {
            let counts: u64 = o.reports.iter().map(|r| r.count).sum();
            alarms += u64::from(o.record.alarm());
            t.push(vec![
                o.seed.trial.into(),
                hyp.label().into(),
                o.record.log_lr_total.into(),
                counts.into(),
                o.record.decision.label().into(),
            ]);
        }
        summary.push((hyp, RateEstimate::from_counts(alarms, u64::from(args.trials))));
    }
    let format = args.output.format.unwrap_or(Format::Csv);
    emit(
        &t.render(format),
        args.output.out.as_deref(),
        RunManifest::new("simulate", loaded.label, loaded.config_sha256).with_run(args.seed, args.trials),
    )?;
    eprintln!("log_gamma = {}", fmt_float(log_gamma));
    for (hyp, est) in summary {
        let name = match hyp {
            Hypothesis::H0 => "pfa_hat",
            Hypothesis::H1 => "pd_hat",
        };
        let flag = if est.normal_approximation_ok() { "" } else { " (too few hits or misses for the normal approximation)" };
        eprintln!(
            "{name} = {} +/- {} (95%, {} trials){flag}",
            fmt_float(est.value),
            fmt_float(est.half_width),
            est.trials
        );
    }
    Ok(())
}

pub fn roc(args: &RocArgs) -> Result<(), CliError> {
    let grid = parse_grid(&args.grid)?;
    if args.trials < npfusion::detector::MIN_TRIALS {
        return Err(CliError::usage(format!("--trials must be at least {}", npfusion::detector::MIN_TRIALS)));
    }
    let loaded = load(&args.source)?;
    let points = roc_curve(&loaded.scenario, &grid, args.trials, args.seed)?;
    let mut t = Table::new(vec!["log_gamma", "gamma", "pfa", "pd"]);
    for p in points {
        t.push(vec![p.log_gamma.into(), p.log_gamma.exp().into(), p.pfa.into(), p.pd.into()]);
    }
    let format = args.output.format.unwrap_or(Format::Csv);
    emit(
        &t.render(format),
        args.output.out.as_deref(),
        RunManifest::new("roc", loaded.label, loaded.config_sha256).with_run(args.seed, args.trials),
    )
}

pub fn calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    check_alpha(args.alpha)?;
    let loaded = load(&args.source)?;
    let format = args.output.format.unwrap_or(Format::Csv);
    let (table, manifest) = match args.method {
        Method::Bound => {
            let c = loaded.scenario.constants()?;
            let cal = calibrate_threshold_bound(&c, args.alpha)?;
            let mut t = Table::new(vec!["method", "alpha", "count_threshold", "log_gamma", "gamma", "achieved_bound"]);
            t.push(vec![
                "bound".into(),
                args.alpha.into(),
                cal.count_threshold.into(),
                cal.log_gamma.into(),
                cal.log_gamma.exp().into(),
                cal.achieved_bound.into(),
            ]);
            (t, RunManifest::new("calibrate", loaded.label, loaded.config_sha256))
        }
        Method::Mc => {
            if args.trials < npfusion::detector::MIN_TRIALS {
                return Err(CliError::usage(format!("--trials must be at least {}", npfusion::detector::MIN_TRIALS)));
            }
            let cal = calibrate_threshold_mc(&loaded.scenario, args.alpha, args.trials, args.seed)?;
            let mut t = Table::new(vec!["method", "alpha", "log_gamma", "gamma", "empirical_pfa", "trials", "reliable"]);
            t.push(vec![
                "mc".into(),
                args.alpha.into(),
                cal.log_gamma.into(),
                cal.log_gamma.exp().into(),
                cal.empirical_pfa.into(),
                cal.trials.into(),
                cal.reliable.into(),
            ]);
            (
                t,
                RunManifest::new("calibrate", loaded.label, loaded.config_sha256).with_run(args.seed, args.trials),
            )
        }
    };
    emit(&table.render(format), args.output.out.as_deref(), manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_grids() {
        assert_eq!(parse_range("2:10").unwrap(), 2..=10);
        assert!(parse_range("0:3").is_err());
        assert!(parse_range("5:3").is_err());
        assert!(parse_range("5").is_err());
        let g = parse_grid("-1:1:5").unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(parse_grid("1:1:3").is_err());
        assert!(parse_grid("0:1:1").is_err());
    }

    #[test]
    fn sec6_reference_checks_flag_d() {
        let c = ScenarioConfig::paper_sec6().build().unwrap().constants().unwrap();
        for q in quoted_values(Some("paper-sec6")) {
            let v = computed_value(q.name, &c).unwrap();
            let ok = (v - q.quoted).abs() <= q.tolerance;
            assert_eq!(ok, q.name != "D_minus_1", "{} computed {v}", q.name);
        }
        assert!(quoted_values(Some("toy-constant")).is_empty());
    }
}
