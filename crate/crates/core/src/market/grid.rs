use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation dates `0 = t_0 < t_1 < ... < t_n = T`, in ACT/365F year fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateGrid {
    times: Vec<f64>,
}

impl DateGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidInput(
                "a date grid needs t_0 = 0 and at least one observation date".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidInput(format!(
                "grid must start at t_0 = 0, got {}",
                times[0]
            )));
        }
        for (k, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::NonMonotoneTenors { position: k + 1 });
            }
        }
        Ok(Self { times })
    }

    /// Regular grid with `per_year` dates per year out to `horizon` years.
    ///
    /// Dates are `k / per_year`, so a quarterly 30y grid has exactly 120
    /// observation dates after `t_0`.
    pub fn regular(horizon: f64, per_year: u32) -> Result<Self> {
        if per_year == 0 || !(horizon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "regular grid needs horizon > 0 and frequency > 0 (got {horizon}, {per_year})"
            )));
        }
        let steps = (horizon * per_year as f64).round() as usize;
        if steps == 0 {
            return Err(Error::InvalidInput(
                "horizon shorter than one period".into(),
            ));
        }
        let times = (0..=steps).map(|k| k as f64 / per_year as f64).collect();
        Self::new(times)
    }

    /// All dates including `t_0`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of observation dates `n` (excluding `t_0`).
    pub fn n(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("grid is non-empty")
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    /// Accrual `t_k - t_{k-1}` for `k >= 1`.
    pub fn accrual(&self, k: usize) -> f64 {
        self.times[k] - self.times[k - 1]
    }

    /// Index of `t` if it is a grid date (within a small absolute tolerance).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        const TOL: f64 = 1e-9;
        let pos = self.times.partition_point(|&s| s < t - TOL);
        (pos < self.times.len() && (self.times[pos] - t).abs() <= TOL).then_some(pos)
    }

    /// First index `k >= 1` with `t_k >= t`, or `None` when `t > T`.
    pub fn first_index_at_or_after(&self, t: f64) -> Option<usize> {
        if t > self.horizon() {
            return None;
        }
        let pos = self.times.partition_point(|&s| s < t);
        Some(pos.max(1))
    }
}
