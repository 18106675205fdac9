use rand::Rng;
use serde::{Deserialize, Serialize};

use super::curve::DiscountCurve;
use super::grid::DateGrid;
use super::rng::{path_rng, Purpose};
use crate::error::{Error, Result};
use crate::numeric::brent;

/// Piecewise-constant hazard rates; `lambdas[k]` applies on `(tenors[k-1], tenors[k]]`
/// and the last rate is held flat beyond the last tenor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardCurve {
    tenors: Vec<f64>,
    lambdas: Vec<f64>,
}

/// CDS quoting conventions used by the bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdsConventions {
    pub premium_per_year: u32,
    /// Sub-steps per premium period for the protection leg integral.
    pub protection_steps: u32,
}

impl Default for CdsConventions {
    fn default() -> Self {
        Self {
            premium_per_year: 4,
            protection_steps: 8,
        }
    }
}

impl HazardCurve {
    pub fn new(tenors: Vec<f64>, lambdas: Vec<f64>) -> Result<Self> {
        if tenors.is_empty() {
            return Err(Error::Empty("hazard tenors"));
        }
        if tenors.len() != lambdas.len() {
            return Err(Error::DimensionMismatch {
                expected: tenors.len(),
                got: lambdas.len(),
            });
        }
        let mut prev = 0.0;
        for (k, (&t, &l)) in tenors.iter().zip(&lambdas).enumerate() {
            if !(t > prev) {
                return Err(Error::NonMonotoneTenors { position: k });
            }
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::NegativeHazard { tenor: t });
            }
            prev = t;
        }
        Ok(Self { tenors, lambdas })
    }

    pub fn flat(lambda: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![lambda])
    }

    pub fn tenors(&self) -> &[f64] {
        &self.tenors
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `∫_0^t λ(s) ds`.
    pub fn cumulative(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut start = 0.0;
        for (k, &end) in self.tenors.iter().enumerate() {
            let last = k + 1 == self.tenors.len();
            let stop = if last { t } else { t.min(end) };
            if stop <= start {
                break;
            }
            acc += self.lambdas[k] * (stop - start);
            start = end;
            if t <= end {
                break;
            }
        }
        acc
    }

    pub fn survival(&self, t: f64) -> f64 {
        (-self.cumulative(t)).exp()
    }
}

/// Premium and protection legs per unit notional and unit spread.
fn cds_legs(
    hazard: &HazardCurve,
    curve: &DiscountCurve,
    maturity: f64,
    conv: CdsConventions,
) -> (f64, f64) {
    let schedule = super::curve::fixed_schedule(0.0, maturity, conv.premium_per_year);
    let mut annuity = 0.0;
    let mut protection = 0.0;
    for w in schedule.windows(2) {
        let (s, e) = (w[0], w[1]);
        let acc = e - s;
        annuity += acc * curve.df(e) * hazard.survival(e);
        let steps = conv.protection_steps.max(1);
        let h = acc / steps as f64;
        for j in 0..steps {
            let a = s + j as f64 * h;
            let b = a + h;
            let dq = hazard.survival(a) - hazard.survival(b);
            let mid = 0.5 * (a + b);
            protection += curve.df(mid) * dq;
            // accrued premium on default, paid at the default time
            annuity += (mid - s) * curve.df(mid) * dq;
        }
    }
    (annuity, protection)
}

/// Par spread of a CDS with the given maturity under `hazard`.
pub fn cds_par_spread(
    hazard: &HazardCurve,
    curve: &DiscountCurve,
    maturity: f64,
    recovery: f64,
    conv: CdsConventions,
) -> f64 {
    let (annuity, protection) = cds_legs(hazard, curve, maturity, conv);
    (1.0 - recovery) * protection / annuity
}

/// Bootstraps piecewise-constant hazards so each par CDS `(tenor, spread)` prices to zero.
pub fn bootstrap_hazard_curve(
    cds_spreads: &[(f64, f64)],
    recovery: f64,
    curve: &DiscountCurve,
    conv: CdsConventions,
) -> Result<HazardCurve> {
    if !(0.0..1.0).contains(&recovery) {
        return Err(Error::InvalidInput(format!(
            "recovery must lie in [0, 1), got {recovery}"
        )));
    }
    if cds_spreads.is_empty() {
        return Err(Error::Empty("CDS spread list"));
    }
    let mut prev = 0.0;
    for (k, &(t, s)) in cds_spreads.iter().enumerate() {
        if !(t > prev) {
            return Err(Error::NonMonotoneTenors { position: k });
        }
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidInput(format!(
                "CDS spread at {t}y must be >= 0, got {s}"
            )));
        }
        prev = t;
    }
    let mut hz = HazardCurve {
        tenors: Vec::new(),
        lambdas: Vec::new(),
    };
    for &(tenor, spread) in cds_spreads {
        hz.tenors.push(tenor);
        hz.lambdas.push(0.0);
        let j = hz.lambdas.len() - 1;
        let mut npv = |lambda: f64| {
            hz.lambdas[j] = lambda;
            let (annuity, protection) = cds_legs(&hz, curve, tenor, conv);
            (1.0 - recovery) * protection - spread * annuity
        };
        let at_zero = npv(0.0);
        let scale = spread.max(1e-12) * tenor;
        if at_zero.abs() <= 1e-14 * scale {
            continue;
        }
        if at_zero > 0.0 {
            return Err(Error::NegativeHazard { tenor });
        }
        let mut hi = (spread / (1.0 - recovery)).max(1e-4) * 2.0;
        while npv(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e4 {
                return Err(Error::InvalidInput(format!(
                    "no hazard rate reprices the {tenor}y CDS"
                )));
            }
        }
        let lambda = brent(&mut npv, 0.0, hi, 1e-15, 300)
            .ok_or_else(|| Error::InvalidInput(format!("hazard root search failed at {tenor}y")))?;
        hz.lambdas[j] = lambda;
    }
    Ok(hz)
}

fn default_index(cum_at_dates: &[f64], target: f64) -> usize {
    // first k >= 1 with Λ(t_k) >= target; 0 when beyond the horizon
    let pos = cum_at_dates.partition_point(|&c| c < target);
    if pos >= cum_at_dates.len() {
        0
    } else {
        pos.max(1)
    }
}

fn cumulative_on_grid(hazard: &HazardCurve, grid: &DateGrid) -> Vec<f64> {
    grid.times().iter().map(|&t| hazard.cumulative(t)).collect()
}

/// Default grid index per path (0 = survives past the horizon), by inverse transform.
pub fn sample_default_times(
    hazard: &HazardCurve,
    grid: &DateGrid,
    n_paths: usize,
    seed: u64,
) -> Vec<usize> {
    let cum = cumulative_on_grid(hazard, grid);
    (0..n_paths)
        .map(|i| {
            let mut rng = path_rng(seed, Purpose::CounterpartyDefault, i as u64);
            let e = -(1.0 - rng.random::<f64>()).ln();
            default_index(&cum, e)
        })
        .collect()
}

/// Independent counterparty and firm default indices.
///
/// A same-date default is broken by redrawing the firm's uniform (up to 64
/// times). The counterparty marginal is untouched; the firm marginal moves only
/// by the grid tie probability.
pub fn sample_default_pairs(
    counterparty: &HazardCurve,
    firm: &HazardCurve,
    grid: &DateGrid,
    n_paths: usize,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    const MAX_REDRAWS: usize = 64;
    let cum_c = cumulative_on_grid(counterparty, grid);
    let cum_f = cumulative_on_grid(firm, grid);
    let mut tc = Vec::with_capacity(n_paths);
    let mut tf = Vec::with_capacity(n_paths);
    for i in 0..n_paths {
        let mut rc = path_rng(seed, Purpose::CounterpartyDefault, i as u64);
        let mut rf = path_rng(seed, Purpose::FirmDefault, i as u64);
        let c = default_index(&cum_c, -(1.0 - rc.random::<f64>()).ln());
        let mut f = default_index(&cum_f, -(1.0 - rf.random::<f64>()).ln());
        let mut tries = 0;
        while c != 0 && f == c && tries < MAX_REDRAWS {
            f = default_index(&cum_f, -(1.0 - rf.random::<f64>()).ln());
            tries += 1;
        }
        tc.push(c);
        tf.push(f);
    }
    (tc, tf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> DiscountCurve {
        DiscountCurve::flat(0.005)
    }

    #[test]
    fn credit_triangle() {
        let hz =
            bootstrap_hazard_curve(&[(5.0, 0.00933)], 0.4, &curve(), CdsConventions::default())
                .unwrap();
        let approx = 0.00933 / 0.6;
        assert!((hz.lambdas()[0] / approx - 1.0).abs() < 0.05);
        let back = cds_par_spread(&hz, &curve(), 5.0, 0.4, CdsConventions::default());
        assert!((back - 0.00933).abs() < 1e-12);
    }

    #[test]
    fn zero_spread_means_no_default() {
        let hz = bootstrap_hazard_curve(&[(5.0, 0.0)], 0.4, &curve(), CdsConventions::default())
            .unwrap();
        assert_eq!(hz.lambdas()[0], 0.0);
        assert_eq!(hz.survival(7.0), 1.0);
    }

    #[test]
    fn high_yield_curve() {
        let spreads: Vec<(f64, f64)> = (1..=10)
            .map(|k| (k as f64, 0.06 - 0.0025 * (k - 1) as f64))
            .collect();
        let hz =
            bootstrap_hazard_curve(&spreads, 0.4, &curve(), CdsConventions::default()).unwrap();
        assert!(hz.lambdas().iter().all(|&l| l >= 0.0));
        let s10 = hz.survival(10.0);
        assert!(s10 > 0.0 && s10 < 1.0);
        for &(t, s) in &spreads {
            let back = cds_par_spread(&hz, &curve(), t, 0.4, CdsConventions::default());
            assert!((back - s).abs() < 1e-12, "{t}y");
        }
    }

    #[test]
    fn inverted_curve_reports_tenor() {
        let err = bootstrap_hazard_curve(
            &[(1.0, 0.05), (2.0, 0.001)],
            0.4,
            &curve(),
            CdsConventions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NegativeHazard { tenor } if tenor == 2.0));
    }

    #[test]
    fn piecewise_cumulative() {
        let hz = HazardCurve::new(vec![1.0, 3.0], vec![0.1, 0.2]).unwrap();
        assert!((hz.cumulative(0.5) - 0.05).abs() < 1e-15);
        assert!((hz.cumulative(2.0) - 0.3).abs() < 1e-15);
        assert!((hz.cumulative(5.0) - (0.1 + 0.4 + 0.4)).abs() < 1e-15);
        assert_eq!(hz.survival(0.0), 1.0);
    }

    #[test]
    fn default_extremes() {
        let grid = DateGrid::regular(2.0, 4).unwrap();
        let none = sample_default_times(&HazardCurve::flat(0.0).unwrap(), &grid, 100, 1);
        assert!(none.iter().all(|&k| k == 0));
        let all = sample_default_times(&HazardCurve::flat(1e6).unwrap(), &grid, 100, 1);
        assert!(all.iter().all(|&k| k == 1));
    }

    #[test]
    fn pairs_never_tie_when_resolvable() {
        let grid = DateGrid::regular(1.0, 4).unwrap();
        let hz = HazardCurve::flat(2.0).unwrap();
        let (c, f) = sample_default_pairs(&hz, &hz, &grid, 2000, 9);
        assert!(c.iter().zip(&f).all(|(a, b)| *a == 0 || a != b));
    }
}
