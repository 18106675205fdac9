//! Scale factor `S₃` and Wasserstein radius bounds from two sample sets.

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{BcvaSample, EmpiricalDistribution, FvaSample};
use crate::error::{Error, Result};
use crate::market::rng::{path_rng, Purpose};

/// How the spread of a mean exposure profile is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum S3Mode {
    /// Largest difference over all date pairs, `max − min`.
    #[default]
    PairwiseMax,
    /// Largest deviation from the time-average of the profile.
    MeanDeviation,
}

fn spread(profile: &[f64], mode: S3Mode) -> f64 {
    let max = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
    match mode {
        S3Mode::PairwiseMax => max - min,
        S3Mode::MeanDeviation => {
            let mean = profile.iter().sum::<f64>() / profile.len() as f64;
            (max - mean).max(mean - min)
        }
    }
}

/// `½ (spread(x̄⁺) + spread(x̄⁻))`, floored at `1e−8 · max|x̄|` (or `1e−8` when
/// every mean is zero).
pub fn s3_from_profiles(pos: &[f64], neg: &[f64], mode: S3Mode) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Empty("exposure profile"));
    }
    let raw = 0.5 * (spread(pos, mode) + spread(neg, mode));
    let scale = pos.iter().chain(neg).fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = if scale > 0.0 { 1e-8 * scale } else { 1e-8 };
    Ok(raw.max(floor))
}

fn mean_profiles<S>(samples: &[S], row: impl Fn(&S) -> &[f64] + Sync) -> (Vec<f64>, Vec<f64>)
where
    S: Sync,
{
    let n = row(&samples[0]).len();
    let inv = 1.0 / samples.len() as f64;
    let (mut pos, mut neg) = (vec![0.0; n], vec![0.0; n]);
    for s in samples {
        for (k, &v) in row(s).iter().enumerate() {
            pos[k] += v.max(0.0);
            neg[k] += v.min(0.0);
        }
    }
    pos.iter_mut().chain(neg.iter_mut()).for_each(|v| *v *= inv);
    (pos, neg)
}

/// Cross-path means `(x̄⁺, x̄⁻)` per date.
pub fn mean_exposures_bcva(d: &EmpiricalDistribution<BcvaSample>) -> (Vec<f64>, Vec<f64>) {
    mean_profiles(d.samples(), BcvaSample::x)
}

/// Cross-path means `(z̄⁺, z̄⁻)` per date.
pub fn mean_exposures_fva(d: &EmpiricalDistribution<FvaSample>) -> (Vec<f64>, Vec<f64>) {
    mean_profiles(d.samples(), FvaSample::z)
}

pub fn calibrate_s3_bcva(d: &EmpiricalDistribution<BcvaSample>, mode: S3Mode) -> Result<f64> {
    let (pos, neg) = mean_exposures_bcva(d);
    s3_from_profiles(&pos, &neg, mode)
}

pub fn calibrate_s3_fva(d: &EmpiricalDistribution<FvaSample>, mode: S3Mode) -> Result<f64> {
    let (pos, neg) = mean_exposures_fva(d);
    s3_from_profiles(&pos, &neg, mode)
}

/// Minimum-cost perfect assignment on a square matrix (shortest augmenting
/// paths with potentials, `O(m³)`). Returns `assignment[row] = column`.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Vec<usize>> {
    let m = cost.len();
    if m == 0 {
        return Err(Error::Empty("cost matrix"));
    }
    if cost.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidInput("cost matrix must be square".into()));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput(
            "cost matrix has non-finite entries".into(),
        ));
    }
    // 1-based internally; column 0 is the virtual start
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; m];
    for j in 1..=m {
        assignment[p[j] - 1] = j - 1;
    }
    Ok(assignment)
}

/// Optimal matching between two equal-size sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// Average matched cost, the transport discrepancy between the two
    /// uniform empirical measures.
    pub cost: f64,
    pub assignment: Vec<usize>,
}

pub fn min_cost_matching<S: Sync>(
    d1: &[S],
    d2: &[S],
    cost: impl Fn(&S, &S) -> Result<f64> + Sync,
) -> Result<Matching> {
    if d1.len() != d2.len() {
        return Err(Error::SizeMismatch {
            left: d1.len(),
            right: d2.len(),
        });
    }
    if d1.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    let matrix: Vec<Vec<f64>> = d1
        .par_iter()
        .map(|a| d2.iter().map(|b| cost(a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let assignment = hungarian(&matrix)?;
    let total: Vec<f64> = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| matrix[i][j])
        .collect();
    let cost = crate::numeric::ordered_sum(&total) / d1.len() as f64;
    Ok(Matching { cost, assignment })
}

/// Radius bounds `δ_l = c*/2`, `δ_u = c*` and the interpolated grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusBounds {
    pub delta_l: f64,
    pub delta_u: f64,
    pub matching_cost: f64,
    /// Samples per set actually matched (after any subsampling).
    pub matched: usize,
}

impl RadiusBounds {
    pub fn from_cost(c: f64) -> Self {
        Self {
            delta_l: c / 2.0,
            delta_u: c,
            matching_cost: c,
            matched: 0,
        }
    }

    /// `(percentage, δ)` for each percentage of `δ_u`.
    pub fn grid(&self, percentages: &[f64]) -> Vec<(f64, f64)> {
        percentages
            .iter()
            .map(|&p| (p, self.delta_u * (p / 100.0)))
            .collect()
    }

    /// 50%, 60%, ..., 100% of `δ_u`.
    pub fn standard_grid(&self) -> Vec<(f64, f64)> {
        self.grid(&[50.0, 60.0, 70.0, 80.0, 90.0, 100.0])
    }
}

/// Matching is exact but cubic; sets larger than `max_size` are subsampled
/// without replacement to `max_size` points each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingConfig {
    pub max_size: usize,
    pub seed: u64,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            max_size: 2000,
            seed: 0,
        }
    }
}

fn subsample<S: Clone>(d: &[S], k: usize, seed: u64, stream: u64) -> Vec<S> {
    let mut rng = path_rng(seed, Purpose::Subsample, stream);
    let mut idx = sample_indices(&mut rng, d.len(), k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| d[i].clone()).collect()
}

pub fn wasserstein_radius_bounds<S: Clone + Sync>(
    d1: &[S],
    d2: &[S],
    cost: impl Fn(&S, &S) -> Result<f64> + Sync,
    cfg: MatchingConfig,
) -> Result<RadiusBounds> {
    if d1.len() != d2.len() {
        return Err(Error::SizeMismatch {
            left: d1.len(),
            right: d2.len(),
        });
    }
    let m = d1.len();
    let (a, b);
    let (d1, d2) = if cfg.max_size > 0 && m > cfg.max_size {
        a = subsample(d1, cfg.max_size, cfg.seed, 1);
        b = subsample(d2, cfg.max_size, cfg.seed, 2);
        (&a[..], &b[..])
    } else {
        (d1, d2)
    };
    let matching = min_cost_matching(d1, d2, cost)?;
    Ok(RadiusBounds {
        matched: d1.len(),
        ..RadiusBounds::from_cost(matching.cost)
    })
}
