//! Parallel sensor network: each node computes its local log-likelihood
//! ratio and transmits one report at the decision time; the fusion center
//! sums the reports and thresholds.

mod transport;
mod wire;

use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use transport::{ChannelLink, ChannelTransport, ReportLink, TcpLink, TcpTransport, Transport, TransportKind};
pub use wire::{decode_report, encode_line, encode_report, SensorReport, SCHEMA_VERSION};

use crate::detector::{decide_log_lr, DecisionRecord, Hypothesis, TrialSeed};
use crate::likelihood::{centralized_log_lr, sum_by_sensor};
use crate::montecarlo::Simulator;
use crate::scenario::Scenario;
use crate::{Error, Result};

/// One sensor node's whole job for a trial: observe, compute, report.
pub fn run_sensor_node(sim: &Simulator, sensor_id: u32, hypothesis: Hypothesis, seed: TrialSeed) -> Result<SensorReport> {
    let stat = sim.sensor_statistic(sensor_id, hypothesis, seed)?;
    Ok(SensorReport::new(
        sensor_id,
        sim.scenario().horizon(),
        stat.log_lr,
        stat.count as u64,
    ))
}

/// Fuses reports that must carry distinct sensor ids and one common decision
/// time. Reads `sensor_id`, `decision_time` and `log_lr` only.
pub fn fusion_node(reports: &[SensorReport], log_gamma: f64) -> Result<DecisionRecord> {
    let first = reports
        .first()
        .ok_or_else(|| Error::protocol("no reports to fuse"))?;
    if let Some(r) = reports.iter().find(|r| r.decision_time != first.decision_time) {
        return Err(Error::protocol(format!(
            "sensor {} reported at T = {}, sensor {} at T = {}",
            r.sensor_id, r.decision_time, first.sensor_id, first.decision_time
        )));
    }
    let mut entries: Vec<(u32, f64)> = reports.iter().map(|r| (r.sensor_id, r.log_lr)).collect();
    let total = sum_by_sensor(&mut entries).map_err(|e| match e {
        Error::Input(msg) => Error::Protocol(msg),
        other => other,
    })?;
    Ok(decide_log_lr(total, log_gamma))
}

/// Fusion node that knows its roster and the agreed decision time.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionCenter {
    roster: Vec<u32>,
    decision_time: f64,
}

impl FusionCenter {
    pub fn new(mut roster: Vec<u32>, decision_time: f64) -> Result<Self> {
        roster.sort_unstable();
        if roster.is_empty() || roster.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("roster must be non-empty with distinct ids"));
        }
        Ok(Self { roster, decision_time })
    }

    pub fn for_scenario(scenario: &Scenario) -> Result<Self> {
        Self::new(scenario.sensor_ids(), scenario.horizon())
    }

    pub fn roster(&self) -> &[u32] {
        &self.roster
    }

    pub fn decide(&self, reports: &[SensorReport], log_gamma: f64) -> Result<DecisionRecord> {
        if let Some(r) = reports.iter().find(|r| r.decision_time != self.decision_time) {
            return Err(Error::protocol(format!(
                "sensor {} reported at T = {}, expected {}",
                r.sensor_id, r.decision_time, self.decision_time
            )));
        }
        if let Some(r) = reports.iter().find(|r| self.roster.binary_search(&r.sensor_id).is_err()) {
            return Err(Error::protocol(format!("report from unknown sensor {}", r.sensor_id)));
        }
        let record = fusion_node(reports, log_gamma)?;
        if reports.len() != self.roster.len() {
            let missing: Vec<u32> = self
                .roster
                .iter()
                .copied()
                .filter(|id| !reports.iter().any(|r| r.sensor_id == *id))
                .collect();
            return Err(Error::protocol(format!("no report from sensors {missing:?}")));
        }
        Ok(record)
    }
}

/// Order in which sensor nodes are executed within a trial.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum NodeSchedule {
    /// All nodes at once on the thread pool.
    #[default]
    Parallel,
    /// One after another, in the listed order (a permutation of the roster).
    Sequential(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialOptions {
    pub transport: TransportKind,
    pub schedule: NodeSchedule,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: DecisionRecord,
    /// One per sensor, sorted by id.
    pub reports: Vec<SensorReport>,
    pub elapsed: Duration,
    pub seed: TrialSeed,
}

impl TrialOutcome {
    /// Equality ignoring wall-clock time.
    pub fn same_result(&self, other: &Self) -> bool {
        self.record == other.record
            && self.seed == other.seed
            && self.reports.len() == other.reports.len()
            && self.reports.iter().zip(&other.reports).all(|(a, b)| a.bit_eq(b))
    }
}

/// A scenario with its sensor nodes and fusion center.
#[derive(Debug, Clone)]
pub struct Network {
    sim: Simulator,
    fusion: FusionCenter,
    dropped: Vec<u32>,
}

impl Network {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        Ok(Self {
            sim: Simulator::new(scenario)?,
            fusion: FusionCenter::for_scenario(scenario)?,
            dropped: Vec::new(),
        })
    }

    /// The network with `dropped` sensors out of commission. Surviving nodes
    /// keep their random streams, so their reports are unchanged.
    pub fn with_dropout(scenario: &Scenario, dropped: &[u32]) -> Result<Self> {
        let mut net = Self::new(&scenario.without(dropped)?)?;
        net.dropped = dropped.to_vec();
        net.dropped.sort_unstable();
        Ok(net)
    }

    pub fn scenario(&self) -> &Scenario {
        self.sim.scenario()
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn dropped(&self) -> &[u32] {
        &self.dropped
    }

    pub fn run_trial(&self, hypothesis: Hypothesis, log_gamma: f64, seed: TrialSeed) -> Result<TrialOutcome> {
        self.run_trial_with(hypothesis, log_gamma, seed, &TrialOptions::default())
    }

    pub fn run_trial_with(
        &self,
        hypothesis: Hypothesis,
        log_gamma: f64,
        seed: TrialSeed,
        options: &TrialOptions,
    ) -> Result<TrialOutcome> {
        match options.transport {
            TransportKind::Channel => self.run_over(ChannelTransport::new(), hypothesis, log_gamma, seed, &options.schedule),
            TransportKind::Tcp => self.run_over(TcpTransport::bind()?, hypothesis, log_gamma, seed, &options.schedule),
        }
    }

    fn execution_order(&self, schedule: &NodeSchedule) -> Result<Vec<u32>> {
        match schedule {
            NodeSchedule::Parallel => Ok(self.fusion.roster().to_vec()),
            NodeSchedule::Sequential(order) => {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if sorted != self.fusion.roster() {
                    return Err(Error::input(format!(
                        "execution order {order:?} is not a permutation of the roster {:?}",
                        self.fusion.roster()
                    )));
                }
                Ok(order.clone())
            }
        }
    }

    fn run_over<T: Transport>(
        &self,
        mut transport: T,
        hypothesis: Hypothesis,
        log_gamma: f64,
        seed: TrialSeed,
        schedule: &NodeSchedule,
    ) -> Result<TrialOutcome> {
        let started = Instant::now();
        let order = self.execution_order(schedule)?;
        let nodes: Vec<(u32, T::Link)> = order
            .iter()
            .map(|&id| transport.link().map(|l| (id, l)))
            .collect::<Result<_>>()?;
        let k = nodes.len();
        let node = |(id, link): (u32, T::Link)| -> Result<()> {
            let report = run_sensor_node(&self.sim, id, hypothesis, seed)
                .map_err(|e| Error::Model(format!("sensor node {id} failed: {e}")))?;
            link.send(&report)
        };
        let run_nodes = |nodes: Vec<(u32, T::Link)>| -> Result<()> {
            match schedule {
                NodeSchedule::Parallel => nodes.into_par_iter().map(node).collect(),
                NodeSchedule::Sequential(_) => nodes.into_iter().map(node).collect(),
            }
        };
        let (sent, received) = if T::CONCURRENT_COLLECT {
            std::thread::scope(|s| {
                let collector = s.spawn(move || transport.collect(k));
                let sent = run_nodes(nodes);
                let received = collector
                    .join()
                    .unwrap_or_else(|_| Err(Error::protocol("fusion center panicked")));
                (sent, received)
            })
        } else {
            let sent = run_nodes(nodes);
            (sent, transport.collect(k))
        };
        sent?;
        let mut reports = received?;
        let record = self.fusion.decide(&reports, log_gamma)?;
        reports.sort_by_key(|r| r.sensor_id);
        Ok(TrialOutcome {
            record: DecisionRecord {
                truth: Some(hypothesis),
                seed: Some(seed),
                ..record
            },
            reports,
            elapsed: started.elapsed(),
            seed,
        })
    }

    /// Trials `0..trials` over the in-process transport, in trial order.
    pub fn run_trials(&self, hypothesis: Hypothesis, log_gamma: f64, trials: u32, seed: u64) -> Result<Vec<TrialOutcome>> {
        (0..trials)
            .into_par_iter()
            .map(|i| self.run_trial(hypothesis, log_gamma, TrialSeed::new(seed, i)))
            .collect()
    }

    /// The same trial decided by a centralized detector holding every raw
    /// path. Returns the pooled log-likelihood ratio and its decision.
    pub fn centralized_decision(&self, hypothesis: Hypothesis, log_gamma: f64, seed: TrialSeed) -> Result<DecisionRecord> {
        let scenario = self.sim.scenario();
        let paths = scenario
            .sensors()
            .iter()
            .map(|s| self.sim.sensor_path(s.id(), hypothesis, seed))
            .collect::<Result<Vec<_>>>()?;
        let log_lr = centralized_log_lr(scenario, &paths)?;
        Ok(DecisionRecord {
            truth: Some(hypothesis),
            seed: Some(seed),
            ..decide_log_lr(log_lr, log_gamma)
        })
    }
}
