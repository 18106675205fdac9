use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::brent;

/// Single-curve discount factors with log-linear interpolation.
///
/// Pillars store `ln DF(t_j)`; `DF(0) = 1` is implicit. Beyond the last pillar
/// the last zero rate is held flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurve {
    tenors: Vec<f64>,
    log_dfs: Vec<f64>,
}

/// Fixed-leg conventions for par swap bootstrapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapConventions {
    /// Fixed payments per year.
    pub fixed_per_year: u32,
}

impl Default for SwapConventions {
    fn default() -> Self {
        Self { fixed_per_year: 1 }
    }
}

impl DiscountCurve {
    /// Curve from continuously-compounded zero rates at ascending tenors.
    pub fn from_zero_rates(points: &[(f64, f64)]) -> Result<Self> {
        check_tenors(points)?;
        Ok(Self {
            tenors: points.iter().map(|p| p.0).collect(),
            log_dfs: points.iter().map(|&(t, z)| -z * t).collect(),
        })
    }

    /// Flat continuously-compounded curve.
    pub fn flat(rate: f64) -> Self {
        Self {
            tenors: vec![1.0],
            log_dfs: vec![-rate],
        }
    }

    pub fn tenors(&self) -> &[f64] {
        &self.tenors
    }

    pub fn log_df(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.tenors.len() - 1;
        if t >= self.tenors[last] {
            return self.log_dfs[last] * t / self.tenors[last];
        }
        let j = self.tenors.partition_point(|&s| s < t);
        let (t0, l0) = if j == 0 {
            (0.0, 0.0)
        } else {
            (self.tenors[j - 1], self.log_dfs[j - 1])
        };
        let (t1, l1) = (self.tenors[j], self.log_dfs[j]);
        l0 + (l1 - l0) * (t - t0) / (t1 - t0)
    }

    pub fn df(&self, t: f64) -> f64 {
        self.log_df(t).exp()
    }

    pub fn zero_rate(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return -self.log_dfs[0] / self.tenors[0];
        }
        -self.log_df(t) / t
    }

    /// Instantaneous forward rate `-d ln DF / dt` (right limit at pillars).
    pub fn forward(&self, t: f64) -> f64 {
        let last = self.tenors.len() - 1;
        if t >= self.tenors[last] {
            return -self.log_dfs[last] / self.tenors[last];
        }
        let j = self.tenors.partition_point(|&s| s <= t);
        let (t0, l0) = if j == 0 {
            (0.0, 0.0)
        } else {
            (self.tenors[j - 1], self.log_dfs[j - 1])
        };
        -(self.log_dfs[j] - l0) / (self.tenors[j] - t0)
    }

    /// Fixed-leg annuity `sum acc_i DF(t_i)` for a swap starting at `start`.
    pub fn annuity(&self, start: f64, maturity: f64, per_year: u32) -> f64 {
        fixed_schedule(start, maturity, per_year)
            .windows(2)
            .map(|w| (w[1] - w[0]) * self.df(w[1]))
            .sum()
    }

    /// Par rate of a spot-starting swap.
    pub fn par_rate(&self, maturity: f64, per_year: u32) -> f64 {
        (1.0 - self.df(maturity)) / self.annuity(0.0, maturity, per_year)
    }

    /// NPV per unit notional of a spot-starting payer-of-float swap receiving `rate` fixed.
    pub fn receiver_npv(&self, rate: f64, maturity: f64, per_year: u32) -> f64 {
        rate * self.annuity(0.0, maturity, per_year) - (1.0 - self.df(maturity))
    }
}

/// Payment schedule `start = s_0 < s_1 < ... < s_m = maturity`, rolled back from
/// maturity; a short stub, if any, is the first period.
pub fn fixed_schedule(start: f64, maturity: f64, per_year: u32) -> Vec<f64> {
    let step = 1.0 / per_year as f64;
    let mut dates = vec![maturity];
    let mut k = 1;
    loop {
        let t = maturity - k as f64 * step;
        if t <= start + 1e-9 {
            break;
        }
        dates.push(t);
        k += 1;
    }
    dates.push(start);
    dates.reverse();
    dates
}

fn check_tenors(points: &[(f64, f64)]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Empty("tenor list"));
    }
    let mut prev = 0.0;
    for (k, &(t, v)) in points.iter().enumerate() {
        if !(t > prev) {
            return Err(Error::NonMonotoneTenors { position: k });
        }
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite quote at the {t}y tenor"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// Bootstraps a curve so that every par swap `(tenor, rate)` reprices to zero.
pub fn bootstrap_discount_curve(
    swap_rates: &[(f64, f64)],
    conventions: SwapConventions,
) -> Result<DiscountCurve> {
    check_tenors(swap_rates)?;
    if conventions.fixed_per_year == 0 {
        return Err(Error::InvalidInput(
            "fixed leg frequency must be positive".into(),
        ));
    }
    let mut curve = DiscountCurve {
        tenors: Vec::new(),
        log_dfs: Vec::new(),
    };
    for &(tenor, rate) in swap_rates {
        curve.tenors.push(tenor);
        curve.log_dfs.push(0.0);
        let j = curve.tenors.len() - 1;
        let mut npv = |z: f64| {
            curve.log_dfs[j] = -z * tenor;
            // Pays fixed: 1 - DF(T) - rate * annuity, increasing in z.
            -curve.receiver_npv(rate, tenor, conventions.fixed_per_year)
        };
        let z = brent(&mut npv, -0.5, 2.0, 1e-16, 300).ok_or_else(|| Error::BootstrapFailure {
            tenor,
            reason: format!("no positive discount factor reprices the {rate} par swap"),
        })?;
        curve.log_dfs[j] = -z * tenor;
    }
    Ok(curve)
}
