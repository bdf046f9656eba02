//! Sample paths of inhomogeneous Poisson processes by thinning.
//!
//! The dominating process is piecewise constant: `[0, T]` is split into
//! segments on which the model's exact rate bounds are tight, and candidates
//! from a homogeneous process at each segment's upper bound are accepted with
//! probability `rate(t) / bound`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::intensity::{IntensityModel, BOUND_SLACK};
use crate::{Error, Result};

/// Realized jump times of one counting process on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPath {
    horizon: f64,
    jump_times: Vec<f64>,
}

impl EventPath {
    /// Jump times must be strictly increasing and lie in `(0, T]`.
    pub fn new(horizon: f64, jump_times: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::input(format!("horizon must be positive, got {horizon}")));
        }
        if jump_times.iter().any(|&t| !(t > 0.0 && t <= horizon)) {
            return Err(Error::input("jump times must lie in (0, T]"));
        }
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::input("jump times must be strictly increasing"));
        }
        Ok(Self { horizon, jump_times })
    }

    pub fn empty(horizon: f64) -> Result<Self> {
        Self::new(horizon, Vec::new())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// `N_T`.
    pub fn count(&self) -> usize {
        self.jump_times.len()
    }

    /// `N_t`: number of jumps at or before `t` (right-continuous).
    pub fn count_at(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::input(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(self.jump_times.partition_point(|&s| s <= t))
    }

    /// Union of two independent paths on the same horizon.
    pub fn merge(&self, other: &EventPath) -> Result<EventPath> {
        if self.horizon != other.horizon {
            return Err(Error::input("cannot merge paths with different horizons"));
        }
        let mut times = Vec::with_capacity(self.count() + other.count());
        let (mut i, mut j) = (0, 0);
        while i < self.count() || j < other.count() {
            let next = match (self.jump_times.get(i), other.jump_times.get(j)) {
                (Some(&a), Some(&b)) if a <= b => {
                    i += 1;
                    a
                }
                (Some(_), Some(&b)) | (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, None) => unreachable!(),
            };
            push_strictly_increasing(&mut times, next, self.horizon);
        }
        EventPath::new(self.horizon, times)
    }

    /// Line-oriented text: `T=<seconds>` then one jump time per line, all with
    /// 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("T={:.16e}\n", self.horizon);
        for t in &self.jump_times {
            out.push_str(&format!("{t:.16e}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Decode("empty path text".into()))?;
        let horizon = header
            .strip_prefix("T=")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Decode(format!("bad path header `{header}`")))?;
        let times = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Decode(format!("bad jump time `{l}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        EventPath::new(horizon, times)
    }
}

/// Appends `t`, nudging it up by one ulp past the previous time if floating
/// point produced a tie.
fn push_strictly_increasing(times: &mut Vec<f64>, t: f64, horizon: f64) {
    let t = match times.last() {
        Some(&last) if t <= last => last.next_up(),
        _ => t,
    };
    if t <= horizon {
        times.push(t);
    }
}

/// Seed plus stream coordinates. Identical values reproduce identical paths
/// regardless of the order in which streams are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub sensor: u32,
    pub trial: u32,
}

impl RngSeed {
    pub fn new(seed: u64, sensor: u32, trial: u32) -> Self {
        Self { seed, sensor, trial }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((u64::from(self.trial) << 32) | u64::from(self.sensor));
        rng
    }
}

/// Piecewise-constant majorant of a rate on `[0, T]`.
#[derive(Debug, Clone)]
pub struct ThinningEnvelope {
    horizon: f64,
    /// `(start, end, bound)`, contiguous and ordered.
    segments: Vec<(f64, f64, f64)>,
}

const MAX_SEGMENTS: usize = 4096;
const MAX_DEPTH: u32 = 24;
/// Stop splitting once the expected number of rejected candidates on a
/// segment drops below this.
const WASTE_TARGET: f64 = 0.25;

impl ThinningEnvelope {
    pub fn new(rate: &IntensityModel, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::input(format!("horizon must be positive, got {horizon}")));
        }
        let mut segments = Vec::new();
        let mut stack = vec![(0.0, horizon, 0u32)];
        while let Some((a, b, depth)) = stack.pop() {
            let bounds = rate.bounds_on(a, b);
            if !(bounds.max.is_finite() && bounds.max >= 0.0) {
                return Err(Error::model(format!("rate bound on [{a}, {b}] is not finite")));
            }
            let waste = (bounds.max - bounds.min) * (b - a);
            let can_split = depth < MAX_DEPTH && segments.len() + stack.len() < MAX_SEGMENTS;
            if waste > WASTE_TARGET && can_split {
                let mid = 0.5 * (a + b);
                let left = rate.bounds_on(a, mid);
                let right = rate.bounds_on(mid, b);
                // splitting cannot help when the bounds are declared, not computed
                if left != bounds || right != bounds {
                    stack.push((mid, b, depth + 1));
                    stack.push((a, mid, depth + 1));
                    continue;
                }
            }
            segments.push((a, b, bounds.max));
        }
        Ok(Self { horizon, segments })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Expected number of candidate points, `Σ bound · length`.
    pub fn expected_candidates(&self) -> f64 {
        self.segments.iter().map(|(a, b, m)| m * (b - a)).sum()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Draws one path of the process with intensity `rate` using this envelope.
    pub fn sample<R: Rng + ?Sized>(&self, rate: &IntensityModel, rng: &mut R) -> Result<EventPath> {
        let mut times = Vec::new();
        for &(a, b, bound) in &self.segments {
            if bound <= 0.0 {
                continue;
            }
            let mut t = a;
            loop {
                let gap: f64 = rng.sample(Exp1);
                t += gap / bound;
                if t > b {
                    break;
                }
                let r = rate.rate(t);
                if !(r <= bound * (1.0 + BOUND_SLACK)) {
                    return Err(Error::model(format!(
                        "rate {r} at t = {t} exceeds declared bound {bound}"
                    )));
                }
                let u: f64 = rng.random();
                if u * bound < r {
                    push_strictly_increasing(&mut times, t, self.horizon);
                }
            }
        }
        EventPath::new(self.horizon, times)
    }
}

/// One path of the inhomogeneous Poisson process with intensity `rate` on
/// `[0, horizon]`, reproducible from `seed`.
pub fn sample_path(rate: &IntensityModel, horizon: f64, seed: RngSeed) -> Result<EventPath> {
    ThinningEnvelope::new(rate, horizon)?.sample(rate, &mut seed.rng())
}

/// The time-rescaled model `u ↦ factor · rate(factor · u)`. Under it the
/// counts on `[0, T/factor]` have the law of the original counts on `[0, T]`.
pub fn rescaled_rate(rate: &IntensityModel, factor: f64) -> Result<IntensityModel> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::input(format!("rescaling factor must be positive, got {factor}")));
    }
    if factor == 1.0 {
        return Ok(rate.clone());
    }
    Ok(IntensityModel::Rescaled {
        inner: Box::new(rate.clone()),
        factor,
    })
}
