use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::DateGrid;
use super::rng::{path_rng, Purpose};
use crate::error::{Error, Result};

/// Funding spread term structure with a lognormal volatility `v0 exp(-κ t)`.
///
/// Spreads are decimal per annum, linearly interpolated in tenor and flat outside
/// the quoted range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundingCurve {
    tenors: Vec<f64>,
    spreads: Vec<f64>,
    vol0: f64,
    decay: f64,
}

impl FundingCurve {
    pub fn new(points: &[(f64, f64)], vol0: f64, decay: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("funding spread list"));
        }
        let mut prev = f64::NEG_INFINITY;
        for (k, &(t, s)) in points.iter().enumerate() {
            if !(t > prev) || t < 0.0 {
                return Err(Error::NonMonotoneTenors { position: k });
            }
            if !s.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "funding spread at {t}y is not finite"
                )));
            }
            prev = t;
        }
        if !(vol0 >= 0.0) || !vol0.is_finite() || !decay.is_finite() {
            return Err(Error::InvalidInput(
                "funding vol parameters must be finite, vol >= 0".into(),
            ));
        }
        Ok(Self {
            tenors: points.iter().map(|p| p.0).collect(),
            spreads: points.iter().map(|p| p.1).collect(),
            vol0,
            decay,
        })
    }

    /// Vol decaying from `vol0` to `vol_end` over `horizon` years.
    pub fn with_vol_endpoints(
        points: &[(f64, f64)],
        vol0: f64,
        vol_end: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !(vol0 > 0.0 && vol_end > 0.0 && horizon > 0.0) {
            return Err(Error::InvalidInput(
                "vol endpoints and horizon must be positive".into(),
            ));
        }
        Self::new(points, vol0, (vol0 / vol_end).ln() / horizon)
    }

    /// Deterministic spread curve with zero volatility.
    pub fn deterministic(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points, 0.0, 0.0)
    }

    pub fn spread(&self, t: f64) -> f64 {
        let n = self.tenors.len();
        if t <= self.tenors[0] {
            return self.spreads[0];
        }
        if t >= self.tenors[n - 1] {
            return self.spreads[n - 1];
        }
        let j = self.tenors.partition_point(|&s| s < t);
        let (t0, t1) = (self.tenors[j - 1], self.tenors[j]);
        let w = (t - t0) / (t1 - t0);
        self.spreads[j - 1] * (1.0 - w) + self.spreads[j] * w
    }

    pub fn vol(&self, t: f64) -> f64 {
        self.vol0 * (-self.decay * t).exp()
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// `∫_s^t vol(u)² du`.
    fn integrated_variance(&self, s: f64, t: f64) -> f64 {
        let k = self.decay;
        let v2 = self.vol0 * self.vol0;
        if k.abs() < 1e-14 {
            v2 * (t - s)
        } else {
            v2 * ((-2.0 * k * s).exp() - (-2.0 * k * t).exp()) / (2.0 * k)
        }
    }
}

/// Per-path period funding factors `f(t_{k-1}, t_k)` (spread times accrual),
/// row-major `[path][period]` for periods `k = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundingPaths {
    n: usize,
    factors: Vec<f64>,
}

impl FundingPaths {
    pub fn n_paths(&self) -> usize {
        self.factors.len().checked_div(self.n).unwrap_or(0)
    }

    pub fn periods(&self) -> usize {
        self.n
    }

    pub fn path(&self, i: usize) -> &[f64] {
        &self.factors[i * self.n..(i + 1) * self.n]
    }
}

/// Simulates lognormal spreads `s(t) = s_0(t) exp(X_t)`, `E[exp X_t] = 1`; each
/// period accrues at the spread observed at its start.
pub fn simulate_funding_spreads(
    curve: &FundingCurve,
    grid: &DateGrid,
    n_paths: usize,
    seed: u64,
) -> FundingPaths {
    let times = grid.times();
    let n = grid.n();
    let inc: Vec<f64> = times
        .windows(2)
        .map(|w| curve.integrated_variance(w[0], w[1]))
        .collect();
    let mut factors = vec![0.0; n * n_paths];
    factors
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            let mut rng = path_rng(seed, Purpose::Funding, i as u64);
            let mut xlog = 0.0f64;
            for k in 1..=n {
                let t0 = times[k - 1];
                row[k - 1] = curve.spread(t0) * xlog.exp() * (times[k] - t0);
                let z: f64 = rng.sample(StandardNormal);
                xlog += -0.5 * inc[k - 1] + inc[k - 1].sqrt() * z;
            }
        });
    FundingPaths { n, factors }
}
