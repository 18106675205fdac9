//! Pathwise portfolio valuation and sample assembly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{BcvaSample, FvaSample};
use crate::error::{Error, Result};
use crate::market::{DateGrid, FundingPaths, HullWhite, HwPaths, SwapSpec};

/// Discounted values `V[i][k]` for path `i` and grid date `k = 0..=n`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureCube {
    n_paths: usize,
    n_dates: usize,
    values: Vec<f64>,
}

impl ExposureCube {
    pub fn new(n_paths: usize, n_dates: usize, values: Vec<f64>) -> Result<Self> {
        if n_paths == 0 || n_dates == 0 {
            return Err(Error::Empty("exposure cube"));
        }
        if values.len() != n_paths * n_dates {
            return Err(Error::DimensionMismatch {
                expected: n_paths * n_dates,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "exposure cube has non-finite entries".into(),
            ));
        }
        Ok(Self {
            n_paths,
            n_dates,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_dates = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_dates) {
            return Err(Error::InvalidInput("ragged exposure rows".into()));
        }
        Self::new(rows.len(), n_dates, rows.concat())
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    /// Dates including `t_0`.
    pub fn n_dates(&self) -> usize {
        self.n_dates
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_dates..(i + 1) * self.n_dates]
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n_dates + k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.value(i, k)).collect()
    }

    /// `V⁺ = max(V, 0)`.
    pub fn positive(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    /// `V⁻ = min(V, 0)`.
    pub fn negative(&self) -> Self {
        self.map(|v| v.min(0.0))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n_paths: self.n_paths,
            n_dates: self.n_dates,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Recovery rates of the counterparty and the firm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    counterparty: f64,
    firm: f64,
}

impl RecoveryConfig {
    pub fn new(counterparty: f64, firm: f64) -> Result<Self> {
        for (name, r) in [("counterparty", counterparty), ("firm", firm)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidInput(format!(
                    "{name} recovery must lie in [0, 1), got {r}"
                )));
            }
        }
        Ok(Self { counterparty, firm })
    }

    pub fn counterparty(&self) -> f64 {
        self.counterparty
    }

    pub fn firm(&self) -> f64 {
        self.firm
    }
}

struct Schedule {
    /// Grid indices of `T_0 = 0, T_1, ..., T_m`.
    idx: Vec<usize>,
    sign: f64,
    notional: f64,
    coupon: f64,
}

/// Values every swap along every path and discounts with the pathwise bank
/// account. Column `k` holds the value just after any payment at `t_k`.
pub fn price_portfolio(
    paths: &HwPaths,
    model: &HullWhite,
    portfolio: &[SwapSpec],
    grid: &DateGrid,
) -> Result<ExposureCube> {
    let nd = grid.times().len();
    if paths.n_dates() != nd {
        return Err(Error::DimensionMismatch {
            expected: nd,
            got: paths.n_dates(),
        });
    }
    let mut schedules = Vec::with_capacity(portfolio.len());
    for s in portfolio {
        let mut idx = vec![0];
        idx.extend(s.payment_indices(grid)?);
        schedules.push(Schedule {
            idx,
            sign: s.direction.sign(),
            notional: s.notional,
            coupon: s.coupon,
        });
    }
    let times = grid.times();
    // ln P(t_k, t_j) = a[k][j] − b[k][j] x(t_k)
    let mut a = vec![0.0; nd * nd];
    let mut b = vec![0.0; nd * nd];
    for k in 0..nd {
        for j in k..nd {
            let (aa, bb) = model.bond_coefficients(times[k], times[j]);
            a[k * nd + j] = aa;
            b[k * nd + j] = bb;
        }
    }
    let n_paths = paths.n_paths();
    let mut values = vec![0.0; n_paths * nd];
    values.par_chunks_mut(nd).enumerate().for_each(|(i, row)| {
        let x = paths.x(i);
        let ld = paths.log_discount(i);
        let mut bonds = vec![0.0; nd * nd];
        for k in 0..nd {
            for j in k..nd {
                bonds[k * nd + j] = (a[k * nd + j] - b[k * nd + j] * x[k]).exp();
            }
        }
        let p = |k: usize, j: usize| bonds[k * nd + j];
        for (k, out) in row.iter_mut().enumerate() {
            let mut v = 0.0;
            for s in &schedules {
                let m = s.idx.len() - 1;
                if k >= s.idx[m] {
                    continue;
                }
                let js = s.idx.partition_point(|&t| t <= k);
                let mut fixed = 0.0;
                for j in js..=m {
                    fixed += (times[s.idx[j]] - times[s.idx[j - 1]]) * p(k, s.idx[j]);
                }
                let float = p(k, s.idx[js]) / p(s.idx[js - 1], s.idx[js]) - p(k, s.idx[m]);
                v += s.sign * s.notional * (s.coupon * fixed - float);
            }
            *out = v * ld[k].exp();
        }
    });
    ExposureCube::new(n_paths, nd, values)
}

/// First-to-default filtered indicator indices: `(y^c, y^f)`.
pub fn first_to_default(tau_c: usize, tau_f: usize) -> (usize, usize) {
    let c = if tau_c != 0 && (tau_f == 0 || tau_c < tau_f) {
        tau_c
    } else {
        0
    };
    let f = if tau_f != 0 && (tau_c == 0 || tau_f < tau_c) {
        tau_f
    } else {
        0
    };
    (c, f)
}

fn check_defaults(cube: &ExposureCube, c: &[usize], f: &[usize]) -> Result<()> {
    let n = cube.n_dates() - 1;
    if n == 0 {
        return Err(Error::InvalidInput(
            "cube needs at least one date after t_0".into(),
        ));
    }
    for v in [c, f] {
        if v.len() != cube.n_paths() {
            return Err(Error::DimensionMismatch {
                expected: cube.n_paths(),
                got: v.len(),
            });
        }
        if let Some(bad) = v.iter().find(|&&t| t > n) {
            return Err(Error::InvalidInput(format!(
                "default index {bad} beyond grid length {n}"
            )));
        }
    }
    Ok(())
}

/// `x = (1 − R_C) V⁺ + (1 − R_F) V⁻` over dates `1..=n`, with first-to-default
/// indicators.
pub fn build_bcva_samples(
    cube: &ExposureCube,
    cpty_defaults: &[usize],
    firm_defaults: &[usize],
    recovery: RecoveryConfig,
) -> Result<Vec<BcvaSample>> {
    check_defaults(cube, cpty_defaults, firm_defaults)?;
    let (lc, lf) = (1.0 - recovery.counterparty, 1.0 - recovery.firm);
    (0..cube.n_paths())
        .into_par_iter()
        .map(|i| {
            let x = cube.row(i)[1..]
                .iter()
                .map(|&v| if v > 0.0 { lc * v } else { lf * v })
                .collect();
            let (c, f) = first_to_default(cpty_defaults[i], firm_defaults[i]);
            BcvaSample::new(x, c, f)
        })
        .collect()
}

/// Number of leading dates with both parties alive strictly after `t_k`.
pub fn survival_block(tau_c: usize, tau_f: usize, n: usize) -> usize {
    let alive = |t: usize| if t == 0 { n } else { t - 1 };
    alive(tau_c).min(alive(tau_f))
}

/// Funding exposures `f(t_{k−1}, t_k) V(t_k)` with a zero column at `t_0`.
pub fn funding_cube(cube: &ExposureCube, funding: &FundingPaths) -> Result<ExposureCube> {
    let n = cube.n_dates() - 1;
    if funding.periods() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: funding.periods(),
        });
    }
    if funding.n_paths() != cube.n_paths() {
        return Err(Error::DimensionMismatch {
            expected: cube.n_paths(),
            got: funding.n_paths(),
        });
    }
    let mut values = vec![0.0; cube.n_paths() * (n + 1)];
    values
        .par_chunks_mut(n + 1)
        .enumerate()
        .for_each(|(i, row)| {
            let v = cube.row(i);
            let f = funding.path(i);
            for k in 1..=n {
                row[k] = f[k - 1] * v[k];
            }
        });
    ExposureCube::new(cube.n_paths(), n + 1, values)
}

/// `z[k] = f(t_{k−1}, t_k) V(t_k)` with the joint survival block.
pub fn build_fva_samples(
    cube: &ExposureCube,
    cpty_defaults: &[usize],
    firm_defaults: &[usize],
    funding: &FundingPaths,
) -> Result<Vec<FvaSample>> {
    check_defaults(cube, cpty_defaults, firm_defaults)?;
    let z = funding_cube(cube, funding)?;
    let n = cube.n_dates() - 1;
    (0..cube.n_paths())
        .into_par_iter()
        .map(|i| {
            let l = survival_block(cpty_defaults[i], firm_defaults[i], n);
            FvaSample::new(z.row(i)[1..].to_vec(), l)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{
        simulate_funding_spreads, simulate_short_rates, Direction, DiscountCurve, FundingCurve,
        HwParams,
    };

    fn model(sigma: f64) -> HullWhite {
        let curve =
            DiscountCurve::from_zero_rates(&[(1.0, 0.005), (3.0, 0.006), (10.0, 0.009)]).unwrap();
        HullWhite::new(HwParams::constant(0.03, sigma).unwrap(), curve)
    }

    fn swap(maturity: f64, coupon: f64, direction: Direction) -> SwapSpec {
        SwapSpec {
            notional: 10.0,
            maturity,
            direction,
            coupon,
            per_year: 4,
        }
    }

    #[test]
    fn par_swap_starts_at_zero() {
        let m = model(0.01);
        let grid = DateGrid::regular(5.0, 4).unwrap();
        let mut s = swap(5.0, 0.0, Direction::PayFixed);
        let ann: f64 = (1..=20).map(|j| 0.25 * m.curve.df(j as f64 / 4.0)).sum();
        s.coupon = (1.0 - m.curve.df(5.0)) / ann;
        let paths = simulate_short_rates(&m, &grid, 8, 3).unwrap();
        let cube = price_portfolio(&paths, &m, &[s], &grid).unwrap();
        for i in 0..8 {
            assert!(cube.value(i, 0).abs() < 1e-8 * 10.0);
            assert_eq!(cube.value(i, 20), 0.0);
        }
    }

    #[test]
    fn zero_vol_paths_agree() {
        let m = model(0.0);
        let grid = DateGrid::regular(3.0, 4).unwrap();
        let paths = simulate_short_rates(&m, &grid, 4, 3).unwrap();
        let cube = price_portfolio(
            &paths,
            &m,
            &[swap(3.0, 0.01, Direction::ReceiveFixed)],
            &grid,
        )
        .unwrap();
        for i in 1..4 {
            for k in 0..cube.n_dates() {
                assert!((cube.value(i, k) - cube.value(0, k)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn two_period_swap_by_hand() {
        let m = model(0.0);
        let grid = DateGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let s = SwapSpec {
            notional: 1.0,
            maturity: 1.0,
            direction: Direction::ReceiveFixed,
            coupon: 0.02,
            per_year: 2,
        };
        let paths = simulate_short_rates(&m, &grid, 1, 1).unwrap();
        let cube = price_portfolio(&paths, &m, &[s], &grid).unwrap();
        let df = |t: f64| m.curve.df(t);
        let v0 = 0.02 * 0.5 * (df(0.5) + df(1.0)) - (1.0 - df(1.0));
        assert!((cube.value(0, 0) - v0).abs() < 1e-14);
        // at t = 0.5 one period remains; deterministic rates make the bank
        // account equal the curve discount factor
        let v1 = df(0.5) * (0.02 * 0.5 * df(1.0) / df(0.5) - (1.0 - df(1.0) / df(0.5)));
        assert!((cube.value(0, 1) - v1).abs() < 1e-14);
    }

    #[test]
    fn indicator_assembly() {
        let cube = ExposureCube::from_rows(&vec![vec![0.0, 1.0, -2.0, 3.0]; 3]).unwrap();
        let s = build_bcva_samples(
            &cube,
            &[0, 2, 3],
            &[0, 3, 1],
            RecoveryConfig::new(0.4, 0.5).unwrap(),
        )
        .unwrap();
        assert_eq!((s[0].tau_c(), s[0].tau_f()), (0, 0));
        assert_eq!((s[1].tau_c(), s[1].tau_f()), (2, 0));
        assert_eq!((s[2].tau_c(), s[2].tau_f()), (0, 1));
        assert!((s[0].x()[0] - 0.6).abs() < 1e-15);
        assert_eq!(s[0].x()[1], -1.0);
        let r0 = build_bcva_samples(
            &cube,
            &[1, 0, 0],
            &[0, 0, 0],
            RecoveryConfig::new(0.0, 0.0).unwrap(),
        )
        .unwrap();
        assert_eq!(r0[0].x(), &[1.0, -2.0, 3.0]);
    }

    #[test]
    fn survival_blocks() {
        assert_eq!(survival_block(0, 0, 5), 5);
        assert_eq!(survival_block(3, 0, 5), 2);
        assert_eq!(survival_block(4, 2, 5), 1);
    }

    #[test]
    fn zero_spreads_give_zero_funding() {
        let m = model(0.01);
        let grid = DateGrid::regular(2.0, 4).unwrap();
        let paths = simulate_short_rates(&m, &grid, 5, 2).unwrap();
        let cube =
            price_portfolio(&paths, &m, &[swap(2.0, 0.01, Direction::PayFixed)], &grid).unwrap();
        let fc = FundingCurve::deterministic(&[(1.0, 0.0)]).unwrap();
        let f = simulate_funding_spreads(&fc, &grid, 5, 2);
        let s = build_fva_samples(&cube, &[0; 5], &[0; 5], &f).unwrap();
        assert!(s
            .iter()
            .all(|s| s.z().iter().all(|&z| z == 0.0) && s.block() == 8));
    }
}
