use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::{fixed_schedule, DiscountCurve};
use super::grid::DateGrid;
use super::rng::{path_rng, Purpose};
use crate::error::{Error, Result};

/// One-factor Hull-White parameters: mean reversion `a` and a piecewise-constant
/// volatility, `vols[k]` on `(vol_times[k-1], vol_times[k]]`, last value held flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwParams {
    a: f64,
    vol_times: Vec<f64>,
    vols: Vec<f64>,
}

impl HwParams {
    pub fn new(a: f64, vol_times: Vec<f64>, vols: Vec<f64>) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidInput(format!(
                "mean reversion must be > 0, got {a}"
            )));
        }
        if vol_times.is_empty() || vol_times.len() != vols.len() {
            return Err(Error::DimensionMismatch {
                expected: vol_times.len().max(1),
                got: vols.len(),
            });
        }
        let mut prev = 0.0;
        for (k, (&t, &s)) in vol_times.iter().zip(&vols).enumerate() {
            if !(t > prev) {
                return Err(Error::NonMonotoneTenors { position: k });
            }
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "volatility must be >= 0, got {s}"
                )));
            }
            prev = t;
        }
        Ok(Self { a, vol_times, vols })
    }

    pub fn constant(a: f64, sigma: f64) -> Result<Self> {
        Self::new(a, vec![1.0], vec![sigma])
    }

    pub fn mean_reversion(&self) -> f64 {
        self.a
    }

    pub fn vol_times(&self) -> &[f64] {
        &self.vol_times
    }

    pub fn vols(&self) -> &[f64] {
        &self.vols
    }

    pub fn sigma(&self, t: f64) -> f64 {
        let k = self.vol_times.partition_point(|&s| s < t);
        self.vols[k.min(self.vols.len() - 1)]
    }

    /// `Σ σ_k² g(u0, u1)` over the constant-volatility pieces of `[s, e]`.
    fn integrate(&self, s: f64, e: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
        if e <= s {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut lo = s;
        for (k, &end) in self.vol_times.iter().enumerate() {
            let last = k + 1 == self.vol_times.len();
            let hi = if last { e } else { e.min(end) };
            if hi > lo {
                let v = self.vols[k];
                if v != 0.0 {
                    acc += v * v * g(lo, hi);
                }
                lo = hi;
            }
            if lo >= e {
                break;
            }
        }
        acc
    }

    /// `Var(x_t | x_s)`.
    pub fn var_x(&self, s: f64, t: f64) -> f64 {
        let a = self.a;
        self.integrate(s, t, |u0, u1| {
            ((-2.0 * a * (t - u1)).exp() - (-2.0 * a * (t - u0)).exp()) / (2.0 * a)
        })
    }

    /// `Var(∫_s^t x_u du | x_s)`.
    pub fn var_integral(&self, s: f64, t: f64) -> f64 {
        let a = self.a;
        self.integrate(s, t, |u0, u1| {
            let e1 = (-a * (t - u1)).exp() - (-a * (t - u0)).exp();
            let e2 = (-2.0 * a * (t - u1)).exp() - (-2.0 * a * (t - u0)).exp();
            ((u1 - u0) - 2.0 * e1 / a + e2 / (2.0 * a)) / (a * a)
        })
    }

    /// `Cov(x_t, ∫_s^t x_u du | x_s)`.
    pub fn cov_x_integral(&self, s: f64, t: f64) -> f64 {
        let a = self.a;
        self.integrate(s, t, |u0, u1| {
            let e1 = (-a * (t - u1)).exp() - (-a * (t - u0)).exp();
            let e2 = (-2.0 * a * (t - u1)).exp() - (-2.0 * a * (t - u0)).exp();
            (e1 / a - e2 / (2.0 * a)) / a
        })
    }

    pub fn b(&self, t: f64, maturity: f64) -> f64 {
        (1.0 - (-self.a * (maturity - t)).exp()) / self.a
    }
}

/// Hull-White model `r(t) = x(t) + φ(t)` fitted to an initial discount curve.
#[derive(Debug, Clone)]
pub struct HullWhite {
    pub params: HwParams,
    pub curve: DiscountCurve,
}

impl HullWhite {
    pub fn new(params: HwParams, curve: DiscountCurve) -> Self {
        Self { params, curve }
    }

    /// Deterministic shift `φ(t)`; also the short rate when `σ ≡ 0`.
    pub fn phi(&self, t: f64) -> f64 {
        self.curve.forward(t) + self.params.cov_x_integral(0.0, t)
    }

    /// `(A, B)` with `ln P(t, T) = A - B x(t)`.
    pub fn bond_coefficients(&self, t: f64, maturity: f64) -> (f64, f64) {
        let p = &self.params;
        let a = self.curve.log_df(maturity) - self.curve.log_df(t)
            + 0.5
                * (p.var_integral(t, maturity) - p.var_integral(0.0, maturity)
                    + p.var_integral(0.0, t));
        (a, p.b(t, maturity))
    }

    pub fn bond(&self, t: f64, maturity: f64, x: f64) -> f64 {
        let (a, b) = self.bond_coefficients(t, maturity);
        (a - b * x).exp()
    }

    /// Normal volatility of a payer swaption with the sensitivity of the swap
    /// rate to `x` frozen at the forward state.
    pub fn swaption_normal_vol(&self, expiry: f64, tenor: f64, fixed_per_year: u32) -> f64 {
        self.swap_rate_sensitivity(expiry, tenor, fixed_per_year)
            * (self.params.var_x(0.0, expiry) / expiry).sqrt()
    }

    fn swap_rate_sensitivity(&self, expiry: f64, tenor: f64, fixed_per_year: u32) -> f64 {
        let schedule = fixed_schedule(expiry, expiry + tenor, fixed_per_year);
        let pe = self.curve.df(expiry);
        let mut annuity = 0.0;
        let mut weighted = 0.0;
        for w in schedule.windows(2) {
            let acc = w[1] - w[0];
            let pf = self.curve.df(w[1]) / pe;
            annuity += acc * pf;
            weighted += acc * self.params.b(expiry, w[1]) * pf;
        }
        let end = expiry + tenor;
        let pm = self.curve.df(end) / pe;
        let s = (1.0 - pm) / annuity;
        ((self.params.b(expiry, end) * pm + s * weighted) / annuity).abs()
    }
}

/// Swaption normal-vol quotes, rows by expiry and columns by underlying tenor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolSurface {
    pub expiries: Vec<f64>,
    pub tenors: Vec<f64>,
    pub vols: Vec<Vec<f64>>,
}

impl VolSurface {
    fn validate(&self) -> Result<()> {
        if self.expiries.is_empty() || self.tenors.is_empty() {
            return Err(Error::Empty("volatility surface"));
        }
        if self.vols.len() != self.expiries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.expiries.len(),
                got: self.vols.len(),
            });
        }
        for row in &self.vols {
            if row.len() != self.tenors.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.tenors.len(),
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput(
                    "swaption vols must be finite and >= 0".into(),
                ));
            }
        }
        let mut prev = 0.0;
        for (k, &t) in self.expiries.iter().enumerate() {
            if !(t > prev) {
                return Err(Error::NonMonotoneTenors { position: k });
            }
            prev = t;
        }
        if self.tenors.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput(
                "swaption tenors must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HwCalibration {
    pub params: HwParams,
    /// Model vols, same layout as the surface.
    pub model_vols: Vec<Vec<f64>>,
    pub rmse: f64,
    /// `rmse` divided by the root-mean-square market vol (0 for an all-zero surface).
    pub relative_rmse: f64,
}

/// Fits `σ(t)`, piecewise constant on expiry buckets, to a normal-vol surface with
/// `a` fixed. Each bucket is a one-dimensional least-squares problem solved in
/// closed form, bucket by bucket in expiry order.
pub fn calibrate_hull_white(
    surface: &VolSurface,
    curve: &DiscountCurve,
    a: f64,
    fixed_per_year: u32,
) -> Result<HwCalibration> {
    surface.validate()?;
    let unit = HwParams::constant(a, 1.0)?;
    let mut vols = Vec::with_capacity(surface.expiries.len());
    let mut prev_t = 0.0;
    let mut prev_var = 0.0;
    for (row, &expiry) in surface.vols.iter().zip(&surface.expiries) {
        let unit_model = HullWhite::new(unit.clone(), curve.clone());
        let carried = (-2.0 * a * (expiry - prev_t)).exp() * prev_var;
        let w = unit.var_x(prev_t, expiry);
        let (mut num, mut den) = (0.0, 0.0);
        for (&tenor, &m) in surface.tenors.iter().zip(row) {
            let c = unit_model.swap_rate_sensitivity(expiry, tenor, fixed_per_year) / expiry.sqrt();
            num += c * m;
            den += c * c;
        }
        let s = if den > 0.0 { num / den } else { 0.0 };
        let sigma2 = ((s * s - carried) / w).max(0.0);
        vols.push(sigma2.sqrt());
        prev_var = carried + w * sigma2;
        prev_t = expiry;
    }
    let params = HwParams::new(a, surface.expiries.clone(), vols)?;
    let model = HullWhite::new(params.clone(), curve.clone());
    let mut sq = 0.0;
    let mut msq = 0.0;
    let mut count = 0.0;
    let model_vols: Vec<Vec<f64>> = surface
        .expiries
        .iter()
        .zip(&surface.vols)
        .map(|(&e, row)| {
            surface
                .tenors
                .iter()
                .zip(row)
                .map(|(&t, &m)| {
                    let v = model.swaption_normal_vol(e, t, fixed_per_year);
                    sq += (v - m) * (v - m);
                    msq += m * m;
                    count += 1.0;
                    v
                })
                .collect()
        })
        .collect();
    let rmse = (sq / count).sqrt();
    let relative_rmse = if msq > 0.0 {
        rmse / (msq / count).sqrt()
    } else {
        0.0
    };
    if !rmse.is_finite() {
        return Err(Error::CalibrationFailure {
            residual: rmse,
            reason: "model vols are not finite".into(),
        });
    }
    Ok(HwCalibration {
        params,
        model_vols,
        rmse,
        relative_rmse,
    })
}

/// Simulated state per path and grid date; row-major `[path][date]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HwPaths {
    n_dates: usize,
    x: Vec<f64>,
    log_discount: Vec<f64>,
    phi: Vec<f64>,
}

impl HwPaths {
    pub fn n_paths(&self) -> usize {
        self.x.len() / self.n_dates
    }

    /// Number of dates including `t_0`.
    pub fn n_dates(&self) -> usize {
        self.n_dates
    }

    pub fn x(&self, path: usize) -> &[f64] {
        &self.x[path * self.n_dates..(path + 1) * self.n_dates]
    }

    /// `ln D(t_k) = -∫_0^{t_k} r` along the path.
    pub fn log_discount(&self, path: usize) -> &[f64] {
        &self.log_discount[path * self.n_dates..(path + 1) * self.n_dates]
    }

    pub fn short_rate(&self, path: usize, k: usize) -> f64 {
        self.x(path)[k] + self.phi[k]
    }

    /// Short rates `[path][date]`.
    pub fn short_rates(&self) -> Vec<Vec<f64>> {
        (0..self.n_paths())
            .map(|i| (0..self.n_dates).map(|k| self.short_rate(i, k)).collect())
            .collect()
    }
}

/// Exact joint sampling of `(x, ∫x)` between grid dates.
pub fn simulate_short_rates(
    model: &HullWhite,
    grid: &DateGrid,
    n_paths: usize,
    seed: u64,
) -> Result<HwPaths> {
    if n_paths == 0 {
        return Err(Error::InvalidInput("n_paths must be >= 1".into()));
    }
    let p = &model.params;
    let times = grid.times();
    let nd = times.len();
    struct Step {
        decay: f64,
        b: f64,
        s1: f64,
        c21: f64,
        c22: f64,
    }
    let steps: Vec<Step> = times
        .windows(2)
        .map(|w| {
            let (s, t) = (w[0], w[1]);
            let v1 = p.var_x(s, t);
            let v2 = p.var_integral(s, t);
            let c = p.cov_x_integral(s, t);
            let s1 = v1.max(0.0).sqrt();
            let (c21, c22) = if s1 > 0.0 {
                (c / s1, (v2 - c * c / v1).max(0.0).sqrt())
            } else {
                (0.0, v2.max(0.0).sqrt())
            };
            Step {
                decay: (-p.a * (t - s)).exp(),
                b: p.b(s, t),
                s1,
                c21,
                c22,
            }
        })
        .collect();
    let drift: Vec<f64> = times
        .iter()
        .map(|&t| model.curve.log_df(t) - 0.5 * p.var_integral(0.0, t))
        .collect();
    let phi: Vec<f64> = times.iter().map(|&t| model.phi(t)).collect();

    let mut x = vec![0.0; n_paths * nd];
    let mut log_discount = vec![0.0; n_paths * nd];
    x.par_chunks_mut(nd)
        .zip(log_discount.par_chunks_mut(nd))
        .enumerate()
        .for_each(|(i, (xs, ds))| {
            let mut rng = path_rng(seed, Purpose::Rates, i as u64);
            let (mut xv, mut y) = (0.0f64, 0.0f64);
            ds[0] = 0.0;
            for (k, st) in steps.iter().enumerate() {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                y += st.b * xv + st.c21 * z1 + st.c22 * z2;
                xv = st.decay * xv + st.s1 * z1;
                xs[k + 1] = xv;
                ds[k + 1] = -y + drift[k + 1];
            }
        });
    Ok(HwPaths {
        n_dates: nd,
        x,
        log_discount,
        phi,
    })
}
