//! Small statistical checks used to validate simulations: chi-square tests on
//! count data and sample moments.

use crate::bounds::{poisson_pmf, poisson_right_tail};
use crate::special::gamma_q;
use crate::{Error, Result};

/// Pearson chi-square result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    fn from_statistic(statistic: f64, dof: usize) -> Result<Self> {
        let p_value = if dof == 0 {
            1.0
        } else {
            gamma_q(dof as f64 / 2.0, statistic / 2.0)?
        };
        Ok(Self { statistic, dof, p_value })
    }

    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

const MIN_EXPECTED: f64 = 5.0;

/// Goodness of fit of observed counts to Poisson(`mean`). Adjacent count
/// values are pooled until every bin expects at least five observations; the
/// last bin absorbs the right tail.
pub fn poisson_gof(counts: &[u64], mean: f64) -> Result<ChiSquare> {
    if counts.is_empty() {
        return Err(Error::input("goodness of fit needs observations"));
    }
    let n = counts.len() as f64;
    if mean == 0.0 {
        let stray = counts.iter().filter(|&&c| c != 0).count();
        return Ok(ChiSquare {
            statistic: if stray == 0 { 0.0 } else { f64::INFINITY },
            dof: 0,
            p_value: if stray == 0 { 1.0 } else { 0.0 },
        });
    }
    let max_obs = counts.iter().copied().max().unwrap_or(0);
    let mut observed = vec![0u64; max_obs as usize + 1];
    for &c in counts {
        observed[c as usize] += 1;
    }
    // bins as [lo, hi) ranges of count values; final bin open-ended
    let mut edges = vec![0u64];
    let mut acc = 0.0;
    let mut j = 0u64;
    loop {
        acc += n * poisson_pmf(mean, j)?;
        j += 1;
        let rest = n * poisson_right_tail(mean, j)?;
        if rest < MIN_EXPECTED {
            break;
        }
        if acc >= MIN_EXPECTED {
            edges.push(j);
            acc = 0.0;
        }
    }
    let obs_in = |lo: u64, hi: Option<u64>| -> u64 {
        observed
            .iter()
            .enumerate()
            .filter(|(v, _)| *v as u64 >= lo && hi.is_none_or(|h| (*v as u64) < h))
            .map(|(_, c)| *c)
            .sum()
    };
    let mut statistic = 0.0;
    for (b, &lo) in edges.iter().enumerate() {
        let hi = edges.get(b + 1).copied();
        let p = match hi {
            Some(h) => (lo..h).map(|v| poisson_pmf(mean, v)).sum::<Result<f64>>()?,
            None => poisson_right_tail(mean, lo)?,
        };
        let e = n * p;
        let o = obs_in(lo, hi) as f64;
        statistic += (o - e) * (o - e) / e;
    }
    ChiSquare::from_statistic(statistic, edges.len() - 1)
}

/// Two-sample chi-square homogeneity test on count data: are `a` and `b`
/// drawn from the same distribution? Values are pooled so every bin holds at
/// least ten combined observations.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::input("two-sample test needs observations in both samples"));
    }
    let max = a.iter().chain(b).copied().max().unwrap_or(0) as usize;
    let mut ha = vec![0u64; max + 1];
    let mut hb = vec![0u64; max + 1];
    a.iter().for_each(|&v| ha[v as usize] += 1);
    b.iter().for_each(|&v| hb[v as usize] += 1);

    let min_combined = 2.0 * MIN_EXPECTED;
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let (mut ca, mut cb) = (0u64, 0u64);
    for v in 0..=max {
        ca += ha[v];
        cb += hb[v];
        if (ca + cb) as f64 >= min_combined {
            bins.push((ca, cb));
            ca = 0;
            cb = 0;
        }
    }
    if ca + cb > 0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += ca;
                last.1 += cb;
            }
            None => bins.push((ca, cb)),
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total = na + nb;
    let mut statistic = 0.0;
    for &(oa, ob) in &bins {
        let col = (oa + ob) as f64;
        let ea = col * na / total;
        let eb = col * nb / total;
        statistic += (oa as f64 - ea).powi(2) / ea + (ob as f64 - eb).powi(2) / eb;
    }
    ChiSquare::from_statistic(statistic, bins.len().saturating_sub(1))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation coefficient; NaN when either sample is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}
