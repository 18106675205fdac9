//! Exposure profiles: EE, PFE, effective EE and their time averages.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ExposureCube;

/// Per-date profiles on one side of the exposure distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureProfile {
    pub times: Vec<f64>,
    pub ee: Vec<f64>,
    pub pfe: Vec<f64>,
    pub eff_ee: Vec<f64>,
    pub epe: f64,
    pub eff_epe: f64,
    pub max_pfe: f64,
    pub quantile: f64,
}

/// Positive side on `V⁺`; the negative side is measured on `|V⁻|` so that its
/// PFE and effective EE describe the size of the liability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureProfiles {
    pub positive: ExposureProfile,
    pub negative: ExposureProfile,
}

/// `inf{x : q ≤ F(x)}` on the empirical distribution: the `⌈qN⌉`-th order statistic.
pub fn lower_quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    values[k - 1]
}

fn trapezoid_mean(times: &[f64], v: &[f64]) -> f64 {
    let horizon = times[times.len() - 1] - times[0];
    if horizon <= 0.0 {
        return v[0];
    }
    let area: f64 = times
        .windows(2)
        .zip(v.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum();
    area / horizon
}

fn side(
    cube: &ExposureCube,
    times: &[f64],
    q: f64,
    f: impl Fn(f64) -> f64 + Sync,
) -> ExposureProfile {
    let cols: Vec<(f64, f64)> = (0..cube.n_dates())
        .into_par_iter()
        .map(|k| {
            let mut col: Vec<f64> = cube.column(k).into_iter().map(&f).collect();
            let ee = col.iter().sum::<f64>() / col.len() as f64;
            (ee, lower_quantile(&mut col, q))
        })
        .collect();
    let ee: Vec<f64> = cols.iter().map(|c| c.0).collect();
    let pfe: Vec<f64> = cols.iter().map(|c| c.1).collect();
    let mut eff_ee = Vec::with_capacity(ee.len());
    let mut run = f64::NEG_INFINITY;
    for &e in &ee {
        run = run.max(e);
        eff_ee.push(run);
    }
    ExposureProfile {
        times: times.to_vec(),
        epe: trapezoid_mean(times, &ee),
        eff_epe: trapezoid_mean(times, &eff_ee),
        max_pfe: pfe.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ee,
        pfe,
        eff_ee,
        quantile: q,
    }
}

pub fn exposure_profiles(
    cube: &ExposureCube,
    times: &[f64],
    quantile: f64,
) -> Result<ExposureProfiles> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::InvalidInput(format!(
            "quantile must lie in (0, 1), got {quantile}"
        )));
    }
    if times.len() != cube.n_dates() {
        return Err(Error::DimensionMismatch {
            expected: cube.n_dates(),
            got: times.len(),
        });
    }
    Ok(ExposureProfiles {
        positive: side(cube, times, quantile, |v| v.max(0.0)),
        negative: side(cube, times, quantile, |v| (-v).max(0.0)),
    })
}

/// Sum of per-date PFEs, used for funding exposures that are already
/// per-period accruals.
pub fn integrated_pfe(profile: &ExposureProfile) -> f64 {
    profile.pfe.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_exposure() {
        let cube = ExposureCube::from_rows(&vec![vec![2.0; 3]; 5]).unwrap();
        let p = exposure_profiles(&cube, &[0.0, 0.5, 1.0], 0.95)
            .unwrap()
            .positive;
        assert_eq!(p.ee, vec![2.0; 3]);
        assert_eq!(p.pfe, vec![2.0; 3]);
        assert_eq!(p.eff_ee, vec![2.0; 3]);
        assert_eq!((p.epe, p.eff_epe), (2.0, 2.0));
    }

    #[test]
    fn lower_quantile_order_statistic() {
        let mut v = vec![3.0, 0.0, 2.0, 1.0];
        assert_eq!(lower_quantile(&mut v, 0.95), 3.0);
        assert_eq!(lower_quantile(&mut v, 0.5), 1.0);
        assert_eq!(lower_quantile(&mut v, 0.25), 0.0);
    }

    #[test]
    fn effective_ee_holds_initial_max() {
        let cube = ExposureCube::from_rows(&[vec![3.0, 2.0, 1.0]]).unwrap();
        let p = exposure_profiles(&cube, &[0.0, 1.0, 2.0], 0.9)
            .unwrap()
            .positive;
        assert_eq!(p.eff_ee, vec![3.0; 3]);
        assert_eq!(p.epe, 2.0);
        assert_eq!(p.eff_epe, 3.0);
    }

    #[test]
    fn negative_side_is_magnitude() {
        let cube = ExposureCube::from_rows(&[vec![-1.0, 4.0], vec![-3.0, -2.0]]).unwrap();
        let p = exposure_profiles(&cube, &[0.0, 1.0], 0.9).unwrap();
        assert_eq!(p.negative.ee, vec![2.0, 1.0]);
        assert_eq!(p.negative.pfe, vec![3.0, 2.0]);
        assert_eq!(p.positive.ee, vec![0.0, 2.0]);
    }
}
