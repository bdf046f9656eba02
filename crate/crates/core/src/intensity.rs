//! Deterministic intensity (rate) models in counts per second.
//!
//! Models are evaluated lazily as functions of time. Every kind can report
//! exact lower and upper bounds of its rate over an interval, which the
//! sampler uses as a thinning majorant and the scenario uses for the per-jump
//! factor bounds.

use std::fmt;
use std::sync::Arc;

use crate::quadrature;
use crate::{Error, Result};

/// Number of grid points used by [`IntensityModel::validate`].
const VALIDATION_GRID: usize = 2048;
/// Relative slack allowed when comparing a rate to its own bounds.
pub(crate) const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub min: f64,
    pub max: f64,
}

impl RateBounds {
    pub fn contains(&self, rate: f64) -> bool {
        let slack = BOUND_SLACK * self.max.abs().max(f64::MIN_POSITIVE);
        rate >= self.min - slack && rate <= self.max + slack
    }
}

/// How an integral of a rate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationMethod {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub method: IntegrationMethod,
}

/// A source moving on the line `y = offset` at constant speed past a sensor
/// at `(sensor_position, 0)`, with inverse-square falloff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiationSource {
    /// Sensor x-coordinate (m).
    pub sensor_position: f64,
    /// Source x-coordinate at t = 0 (m).
    pub start: f64,
    /// Perpendicular distance between the source track and the sensor line (m).
    pub offset: f64,
    /// Source speed along +x (m/s).
    pub speed: f64,
    /// Source strength times sensor cross-section (cps·m²).
    pub strength: f64,
}

impl RadiationSource {
    /// Signed x-distance from the sensor to the source at time `t`.
    pub fn displacement(&self, t: f64) -> f64 {
        self.start + self.speed * t - self.sensor_position
    }

    pub fn distance(&self, t: f64) -> f64 {
        self.displacement(t).hypot(self.offset)
    }

    pub fn rate(&self, t: f64) -> f64 {
        let d = self.displacement(t);
        self.strength / (d * d + self.offset * self.offset)
    }

    /// Closed form of ∫ rate over `[a, b]`:
    /// `strength / (offset·speed) · [atan(d(b)/offset) − atan(d(a)/offset)]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if self.strength == 0.0 {
            return 0.0;
        }
        if self.speed == 0.0 {
            return self.rate(a) * (b - a);
        }
        let h = self.offset;
        let x = self.displacement(b) / h;
        let y = self.displacement(a) / h;
        self.strength / (h * self.speed) * atan_difference(x, y)
    }

    pub fn bounds_on(&self, a: f64, b: f64) -> RateBounds {
        let da = self.displacement(a);
        let db = self.displacement(b);
        let far = da.abs().max(db.abs());
        let near = if da.signum() != db.signum() || da == 0.0 || db == 0.0 {
            0.0
        } else {
            da.abs().min(db.abs())
        };
        let h2 = self.offset * self.offset;
        RateBounds {
            min: self.strength / (far * far + h2),
            max: self.strength / (near * near + h2),
        }
    }
}

/// `atan(x) − atan(y)` without cancellation when both arguments are large
/// with the same sign.
fn atan_difference(x: f64, y: f64) -> f64 {
    let xy = x * y;
    if xy > -1.0 {
        ((x - y) / (1.0 + xy)).atan()
    } else {
        x.atan() - y.atan()
    }
}

/// Piecewise-linear rate through `(times[i], rates[i])`, held constant
/// outside the knot range.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    times: Vec<f64>,
    rates: Vec<f64>,
}

impl Tabulated {
    pub fn new(times: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != rates.len() {
            return Err(Error::input("tabulated rate needs matching, non-empty times and rates"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::input("tabulated times must be finite and strictly increasing"));
        }
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::input("tabulated rates must be finite and non-negative"));
        }
        Ok(Self { times, rates })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.rates[0];
        }
        if t >= self.times[n - 1] {
            return self.rates[n - 1];
        }
        let i = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (r0, r1) = (self.rates[i - 1], self.rates[i]);
        r0 + (r1 - r0) * (t - t0) / (t1 - t0)
    }

    fn knots_between(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        self.times.iter().copied().filter(move |&t| t > a && t < b)
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return -self.integral(b, a);
        }
        let mut points = vec![a];
        points.extend(self.knots_between(a, b));
        points.push(b);
        points
            .windows(2)
            .map(|w| 0.5 * (self.rate(w[0]) + self.rate(w[1])) * (w[1] - w[0]))
            .sum()
    }

    pub fn bounds_on(&self, a: f64, b: f64) -> RateBounds {
        let values = [self.rate(a), self.rate(b)]
            .into_iter()
            .chain(self.knots_between(a, b).map(|t| self.rate(t)));
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        });
        RateBounds { min, max }
    }
}

/// Black-box rate function with caller-declared bounds. Integrated by
/// quadrature.
#[derive(Clone)]
pub struct FunctionRate {
    pub label: String,
    pub rate_min: f64,
    pub rate_max: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl FunctionRate {
    pub fn new(
        label: impl Into<String>,
        rate_min: f64,
        rate_max: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            rate_min,
            rate_max,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FunctionRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionRate")
            .field("label", &self.label)
            .field("rate_min", &self.rate_min)
            .field("rate_max", &self.rate_max)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum IntensityModel {
    Constant { rate: f64 },
    RadiationSource(RadiationSource),
    Tabulated(Tabulated),
    Function(FunctionRate),
    /// `factor · inner(factor · u)`: the time-rescaled model on `[0, T/factor]`.
    Rescaled { inner: Box<IntensityModel>, factor: f64 },
    /// Superposition of independent processes.
    Sum(Vec<IntensityModel>),
    /// `inner` with caller-declared global bounds replacing the computed ones.
    Declared {
        inner: Box<IntensityModel>,
        rate_min: f64,
        rate_max: f64,
    },
}

impl IntensityModel {
    pub fn constant(rate: f64) -> Self {
        IntensityModel::Constant { rate }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            IntensityModel::Constant { rate } => *rate,
            IntensityModel::RadiationSource(src) => src.rate(t),
            IntensityModel::Tabulated(tab) => tab.rate(t),
            IntensityModel::Function(func) => (func.f)(t),
            IntensityModel::Rescaled { inner, factor } => factor * inner.rate(factor * t),
            IntensityModel::Sum(terms) => terms.iter().map(|m| m.rate(t)).sum(),
            IntensityModel::Declared { inner, .. } => inner.rate(t),
        }
    }

    /// Bounds of the rate over `[a, b]`. Exact for the built-in kinds;
    /// declared for [`IntensityModel::Function`] and [`IntensityModel::Declared`].
    pub fn bounds_on(&self, a: f64, b: f64) -> RateBounds {
        match self {
            IntensityModel::Constant { rate } => RateBounds { min: *rate, max: *rate },
            IntensityModel::RadiationSource(src) => src.bounds_on(a, b),
            IntensityModel::Tabulated(tab) => tab.bounds_on(a, b),
            IntensityModel::Function(func) => RateBounds {
                min: func.rate_min,
                max: func.rate_max,
            },
            IntensityModel::Rescaled { inner, factor } => {
                let b_inner = inner.bounds_on(factor * a, factor * b);
                RateBounds {
                    min: factor * b_inner.min,
                    max: factor * b_inner.max,
                }
            }
            IntensityModel::Sum(terms) => terms.iter().fold(RateBounds { min: 0.0, max: 0.0 }, |acc, m| {
                let b = m.bounds_on(a, b);
                RateBounds {
                    min: acc.min + b.min,
                    max: acc.max + b.max,
                }
            }),
            IntensityModel::Declared { rate_min, rate_max, .. } => RateBounds {
                min: *rate_min,
                max: *rate_max,
            },
        }
    }

    /// ∫ rate over `[a, b]` in closed form, when the model admits one.
    pub fn closed_form_integral(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            IntensityModel::Constant { rate } => Some(rate * (b - a)),
            IntensityModel::RadiationSource(src) => Some(src.integral(a, b)),
            IntensityModel::Tabulated(tab) => Some(tab.integral(a, b)),
            IntensityModel::Function(_) => None,
            IntensityModel::Rescaled { inner, factor } => inner.closed_form_integral(factor * a, factor * b),
            IntensityModel::Sum(terms) => terms.iter().map(|m| m.closed_form_integral(a, b)).sum(),
            IntensityModel::Declared { inner, .. } => inner.closed_form_integral(a, b),
        }
    }

    /// Adaptive quadrature of the rate, regardless of closed-form availability.
    pub fn quadrature_integral(&self, a: f64, b: f64) -> Result<f64> {
        let scale = self.bounds_on(a, b).max.abs() * (b - a).abs();
        let abs_tol = (1e-10 * scale).max(f64::MIN_POSITIVE);
        quadrature::integrate(|t| self.rate(t), a, b, abs_tol, 1e-12)
    }

    /// Closed form when available, quadrature otherwise.
    pub fn integrate(&self, a: f64, b: f64) -> Result<Integral> {
        match self.closed_form_integral(a, b) {
            Some(value) => Ok(Integral {
                value,
                method: IntegrationMethod::ClosedForm,
            }),
            None => Ok(Integral {
                value: self.quadrature_integral(a, b)?,
                method: IntegrationMethod::Quadrature,
            }),
        }
    }

    /// Checks finiteness and that the rate stays inside its own bounds on a
    /// dense grid over `[0, horizon]`. With `require_positive`, the lower
    /// bound must also be strictly positive.
    pub fn validate(&self, horizon: f64, require_positive: bool) -> Result<()> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::input(format!("horizon must be positive and finite, got {horizon}")));
        }
        self.check_parameters()?;
        let bounds = self.bounds_on(0.0, horizon);
        if !(bounds.min.is_finite() && bounds.max.is_finite()) || bounds.min < 0.0 || bounds.max < bounds.min {
            return Err(Error::model(format!(
                "rate bounds must satisfy 0 <= min <= max < inf, got [{}, {}]",
                bounds.min, bounds.max
            )));
        }
        if require_positive && bounds.min <= 0.0 {
            return Err(Error::model("rate must be bounded away from zero"));
        }
        for i in 0..=VALIDATION_GRID {
            let t = horizon * i as f64 / VALIDATION_GRID as f64;
            let r = self.rate(t);
            if !r.is_finite() || !bounds.contains(r) {
                return Err(Error::model(format!(
                    "rate {r} at t = {t} outside declared bounds [{}, {}]",
                    bounds.min, bounds.max
                )));
            }
        }
        Ok(())
    }

    fn check_parameters(&self) -> Result<()> {
        match self {
            IntensityModel::Constant { rate } => {
                if !(rate.is_finite() && *rate >= 0.0) {
                    return Err(Error::input(format!("constant rate must be finite and >= 0, got {rate}")));
                }
            }
            IntensityModel::RadiationSource(src) => {
                if !(src.offset > 0.0 && src.offset.is_finite()) {
                    return Err(Error::input("source offset must be positive"));
                }
                let all_finite = [src.sensor_position, src.start, src.speed, src.strength]
                    .iter()
                    .all(|v| v.is_finite());
                if !all_finite || src.strength < 0.0 {
                    return Err(Error::input("source parameters must be finite with strength >= 0"));
                }
            }
            IntensityModel::Tabulated(_) => {}
            IntensityModel::Function(func) => {
                if !(func.rate_min >= 0.0 && func.rate_max >= func.rate_min && func.rate_max.is_finite()) {
                    return Err(Error::input("function rate bounds must satisfy 0 <= min <= max < inf"));
                }
            }
            IntensityModel::Rescaled { inner, factor } => {
                if !(*factor > 0.0 && factor.is_finite()) {
                    return Err(Error::input("rescaling factor must be positive"));
                }
                inner.check_parameters()?;
            }
            IntensityModel::Sum(terms) => {
                for m in terms {
                    m.check_parameters()?;
                }
            }
            IntensityModel::Declared { inner, .. } => inner.check_parameters()?,
        }
        Ok(())
    }
}

impl From<RadiationSource> for IntensityModel {
    fn from(src: RadiationSource) -> Self {
        IntensityModel::RadiationSource(src)
    }
}

impl From<Tabulated> for IntensityModel {
    fn from(tab: Tabulated) -> Self {
        IntensityModel::Tabulated(tab)
    }
}

impl From<FunctionRate> for IntensityModel {
    fn from(func: FunctionRate) -> Self {
        IntensityModel::Function(func)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source() -> RadiationSource {
        RadiationSource {
            sensor_position: 0.0,
            start: -4.0,
            offset: 0.36195,
            speed: 17.0,
            strength: 506.8,
        }
    }

    #[test]
    fn radiation_peak_is_strength_over_offset_squared() {
        let src = source();
        let t_over = 4.0 / 17.0;
        assert!((src.distance(t_over) - src.offset).abs() < 1e-15);
        let peak = src.strength / (src.offset * src.offset);
        assert!((src.rate(t_over) - peak).abs() < 1e-9 * peak);
        let b = src.bounds_on(0.0, 1.0);
        assert_eq!(b.max, peak);
    }

    #[test]
    fn radiation_closed_form_matches_quadrature() {
        let m = IntensityModel::from(source());
        let closed = m.closed_form_integral(0.0, 107.0 / 17.0).unwrap();
        let quad = m.quadrature_integral(0.0, 107.0 / 17.0).unwrap();
        assert!(((closed - quad) / closed).abs() < 1e-10, "{closed} vs {quad}");
    }

    #[test]
    fn zero_strength_is_identically_zero() {
        let m = IntensityModel::from(RadiationSource { strength: 0.0, ..source() });
        assert_eq!(m.rate(0.3), 0.0);
        assert_eq!(m.closed_form_integral(0.0, 5.0), Some(0.0));
        assert!(m.validate(5.0, false).is_ok());
        assert!(m.validate(5.0, true).is_err());
    }

    #[test]
    fn tabulated_interpolates_and_integrates_exactly() {
        let tab = Tabulated::new(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 1.0]).unwrap();
        assert_eq!(tab.rate(0.5), 2.0);
        assert_eq!(tab.rate(-1.0), 1.0);
        assert_eq!(tab.rate(5.0), 1.0);
        assert!((tab.integral(0.0, 2.0) - 4.0).abs() < 1e-15);
        assert!((tab.integral(0.5, 1.5) - 2.5).abs() < 1e-15);
        let b = tab.bounds_on(0.0, 0.5);
        assert_eq!((b.min, b.max), (1.0, 2.0));
        assert!(Tabulated::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn function_rate_uses_quadrature() {
        let m = IntensityModel::from(FunctionRate::new("sin", 0.0, 2.0, |t: f64| 1.0 + t.sin()));
        let i = m.integrate(0.0, std::f64::consts::PI).unwrap();
        assert_eq!(i.method, IntegrationMethod::Quadrature);
        assert!((i.value - (std::f64::consts::PI + 2.0)).abs() < 1e-9);
    }

    #[test]
    fn declared_bounds_that_lie_fail_validation() {
        let m = IntensityModel::Declared {
            inner: Box::new(IntensityModel::from(source())),
            rate_min: 0.0,
            rate_max: 10.0,
        };
        assert!(matches!(m.validate(1.0, false), Err(Error::Model(_))));
    }

    #[test]
    fn sum_and_rescale_compose() {
        let m = IntensityModel::Sum(vec![IntensityModel::constant(2.0), IntensityModel::from(source())]);
        let t = 0.37;
        assert_eq!(m.rate(t), 2.0 + source().rate(t));
        let r = IntensityModel::Rescaled {
            inner: Box::new(m.clone()),
            factor: 2.0,
        };
        assert_eq!(r.rate(0.1), 2.0 * m.rate(0.2));
        let lhs = r.closed_form_integral(0.0, 0.5).unwrap();
        let rhs = m.closed_form_integral(0.0, 1.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }
}
