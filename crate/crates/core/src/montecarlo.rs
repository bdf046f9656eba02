//! Seeded trial generation shared by the detector and network simulations.

use rayon::prelude::*;

use crate::likelihood::{fuse, local_log_lr, LocalStatistic};
use crate::poisson_sim::{EventPath, RngSeed, ThinningEnvelope};
use crate::scenario::{Scenario, Sensor};
use crate::{Error, Result};

/// Which measure generates the observations (and, reused, which way a test
/// decided).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hypothesis {
    /// Background only.
    H0,
    /// Background plus source.
    H1,
}

impl Hypothesis {
    fn lane(self) -> u64 {
        match self {
            Hypothesis::H0 => 0x4830_0000_0000_0001,
            Hypothesis::H1 => 0x4831_0000_0000_0002,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        }
    }
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H0" | "h0" | "0" => Ok(Hypothesis::H0),
            "H1" | "h1" | "1" => Ok(Hypothesis::H1),
            other => Err(Error::input(format!("unknown hypothesis `{other}`"))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Provenance of one trial: the user seed and the trial index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialSeed {
    pub seed: u64,
    pub trial: u32,
}

impl TrialSeed {
    pub fn new(seed: u64, trial: u32) -> Self {
        Self { seed, trial }
    }

    /// The stream for one sensor's observations under `hypothesis`. Null and
    /// alternative trials draw from unrelated keys.
    pub fn stream(&self, hypothesis: Hypothesis, sensor: u32) -> RngSeed {
        RngSeed::new(splitmix64(self.seed ^ hypothesis.lane()), sensor, self.trial)
    }
}

/// Network-level statistics of one simulated trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStatistic {
    pub trial: u32,
    pub log_lr: f64,
    /// Per-sensor `N_T`, in roster order.
    pub counts: Vec<u64>,
}

impl TrialStatistic {
    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Scenario plus precomputed thinning envelopes for both hypotheses.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    null_envelopes: Vec<ThinningEnvelope>,
    alt_envelopes: Vec<ThinningEnvelope>,
}

impl Simulator {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let horizon = scenario.horizon();
        let null_envelopes = scenario
            .sensors()
            .iter()
            .map(|s| ThinningEnvelope::new(s.background(), horizon))
            .collect::<Result<_>>()?;
        let alt_envelopes = scenario
            .sensors()
            .iter()
            .map(|s| ThinningEnvelope::new(s.alternative(), horizon))
            .collect::<Result<_>>()?;
        Ok(Self {
            scenario: scenario.clone(),
            null_envelopes,
            alt_envelopes,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn position(&self, sensor: u32) -> Result<usize> {
        self.scenario
            .sensors()
            .iter()
            .position(|s| s.id() == sensor)
            .ok_or_else(|| Error::input(format!("no sensor with id {sensor}")))
    }

    /// The raw path sensor `sensor` observes in trial `seed` under `hypothesis`.
    pub fn sensor_path(&self, sensor: u32, hypothesis: Hypothesis, seed: TrialSeed) -> Result<EventPath> {
        let pos = self.position(sensor)?;
        let s: &Sensor = &self.scenario.sensors()[pos];
        let (model, env) = match hypothesis {
            Hypothesis::H0 => (s.background(), &self.null_envelopes[pos]),
            Hypothesis::H1 => (s.alternative(), &self.alt_envelopes[pos]),
        };
        env.sample(model, &mut seed.stream(hypothesis, sensor).rng())
    }

    /// Local statistic computed by sensor `sensor` in trial `seed`.
    pub fn sensor_statistic(&self, sensor: u32, hypothesis: Hypothesis, seed: TrialSeed) -> Result<LocalStatistic> {
        let path = self.sensor_path(sensor, hypothesis, seed)?;
        local_log_lr(&path, self.scenario.sensor(sensor)?, self.scenario.horizon())
    }

    pub fn trial(&self, hypothesis: Hypothesis, seed: TrialSeed) -> Result<TrialStatistic> {
        let stats = self
            .scenario
            .sensors()
            .iter()
            .map(|s| self.sensor_statistic(s.id(), hypothesis, seed))
            .collect::<Result<Vec<_>>>()?;
        let counts = stats.iter().map(|s| s.count as u64).collect();
        Ok(TrialStatistic {
            trial: seed.trial,
            log_lr: fuse(&stats)?.log_lr_total,
            counts,
        })
    }

    /// `trials` independent trials (indices `0..trials`), run in parallel and
    /// returned in trial order.
    pub fn trials(&self, hypothesis: Hypothesis, trials: u32, seed: u64) -> Result<Vec<TrialStatistic>> {
        (0..trials)
            .into_par_iter()
            .map(|i| self.trial(hypothesis, TrialSeed::new(seed, i)))
            .collect()
    }
}
