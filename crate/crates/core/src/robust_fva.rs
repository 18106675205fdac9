//! Worst-case FVA and its FCA/FBA legs.
//!
//! With `L = ‖y^{cf}‖₁` and prefix sums `P_l`, the inner supremum is
//! `Ψ_α = P_L + max_l h_α(l)` where
//! `h_α(l) = l/(4α) + (P_l − P_L) − α S₃ |l − L|`, attained by shifting the first
//! `l` exposures up by `1/(2α)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{
    best_of, classify, fill_at_budget, golden_log, Boundary, Candidate, DualSolution, SolverConfig,
    WorstCaseDistribution,
};
use crate::empirical::{EmpiricalDistribution, FvaSample};
use crate::error::{Error, Result};
use crate::numeric::ordered_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FvaPsiWitness {
    pub value: f64,
    pub l_star: usize,
    /// `|l* − L|`.
    pub k: usize,
    /// Upward shift applied to the first `l*` exposures, `1/(2α)`.
    pub shift: f64,
}

impl FvaPsiWitness {
    pub fn perturbed(&self, sample: &FvaSample) -> FvaSample {
        let mut z = sample.z().to_vec();
        for v in &mut z[..self.l_star] {
            *v += self.shift;
        }
        FvaSample::new(z, self.l_star).expect("witness keeps sample invariants")
    }

    pub fn transport_cost(&self, s3: f64) -> f64 {
        self.l_star as f64 * self.shift * self.shift + s3 * self.k as f64
    }
}

fn check_inputs(alpha: f64, s3: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    if !(s3 > 0.0) || !s3.is_finite() {
        return Err(Error::InvalidInput(format!("S3 must be > 0, got {s3}")));
    }
    Ok(())
}

#[inline]
fn h(l: usize, prefix_l: f64, prefix_big_l: f64, big_l: usize, alpha: f64, s3: f64) -> f64 {
    l as f64 / (4.0 * alpha) + (prefix_l - prefix_big_l) - alpha * s3 * l.abs_diff(big_l) as f64
}

pub fn psi_alpha_fva(sample: &FvaSample, alpha: f64, s3: f64) -> Result<FvaPsiWitness> {
    check_inputs(alpha, s3)?;
    Ok(psi_unchecked(sample, alpha, s3))
}

fn prefix_at(z: &[f64], l: usize) -> f64 {
    z[..l].iter().sum()
}

pub(crate) fn psi_unchecked(sample: &FvaSample, alpha: f64, s3: f64) -> FvaPsiWitness {
    let z = sample.z();
    let big_l = sample.block();
    let pl = prefix_at(z, big_l);
    let mut prefix = 0.0;
    let (mut best, mut arg) = (h(0, 0.0, pl, big_l, alpha, s3), 0usize);
    for l in 1..=z.len() {
        prefix += z[l - 1];
        let v = h(l, prefix, pl, big_l, alpha, s3);
        if v > best {
            best = v;
            arg = l;
        }
    }
    FvaPsiWitness {
        value: pl + best,
        l_star: arg,
        k: arg.abs_diff(big_l),
        shift: 0.5 / alpha,
    }
}

/// Bounds of `∂F(α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgradientInterval {
    pub alpha: f64,
    pub lo: f64,
    pub hi: f64,
}

impl SubgradientInterval {
    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }
}

/// Per-sample `[min, max]` of `−l/(4α²) − S₃|l − L|` over the active `l`.
fn sample_hull(sample: &FvaSample, alpha: f64, s3: f64) -> (f64, f64) {
    let z = sample.z();
    let big_l = sample.block();
    let pl = prefix_at(z, big_l);
    let mut vals = Vec::with_capacity(z.len() + 1);
    let mut prefix = 0.0;
    vals.push(h(0, 0.0, pl, big_l, alpha, s3));
    for l in 1..=z.len() {
        prefix += z[l - 1];
        vals.push(h(l, prefix, pl, big_l, alpha, s3));
    }
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + max.abs() + pl.abs());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (l, &v) in vals.iter().enumerate() {
        if v >= max - tol {
            let g = -(l as f64) / (4.0 * alpha * alpha) - s3 * l.abs_diff(big_l) as f64;
            lo = lo.min(g);
            hi = hi.max(g);
        }
    }
    (lo, hi)
}

pub fn subgradient_f_fva(
    d: &EmpiricalDistribution<FvaSample>,
    alpha: f64,
    delta: f64,
    s3: f64,
) -> Result<SubgradientInterval> {
    check_inputs(alpha, s3)?;
    Ok(subgradient_unchecked(d, alpha, delta, s3))
}

fn subgradient_unchecked(
    d: &EmpiricalDistribution<FvaSample>,
    alpha: f64,
    delta: f64,
    s3: f64,
) -> SubgradientInterval {
    let hulls: Vec<(f64, f64)> = d
        .samples()
        .par_iter()
        .map(|s| sample_hull(s, alpha, s3))
        .collect();
    let n = hulls.len() as f64;
    let lo = ordered_sum(&hulls.iter().map(|p| p.0).collect::<Vec<_>>()) / n;
    let hi = ordered_sum(&hulls.iter().map(|p| p.1).collect::<Vec<_>>()) / n;
    SubgradientInterval {
        alpha,
        lo: delta + lo,
        hi: delta + hi,
    }
}

fn mean_psi(d: &EmpiricalDistribution<FvaSample>, alpha: f64, s3: f64) -> f64 {
    let vals: Vec<f64> = d
        .samples()
        .par_iter()
        .map(|s| psi_unchecked(s, alpha, s3).value)
        .collect();
    ordered_sum(&vals) / vals.len() as f64
}

pub fn dual_objective_fva(
    d: &EmpiricalDistribution<FvaSample>,
    alpha: f64,
    delta: f64,
    s3: f64,
) -> Result<f64> {
    check_inputs(alpha, s3)?;
    Ok(alpha * delta + mean_psi(d, alpha, s3))
}

/// Funding problem variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FvaLeg {
    Full,
    /// Cost leg on `z⁺`.
    Cost,
    /// Benefit leg on `z⁻`.
    Benefit,
}

impl FvaLeg {
    pub fn transform(
        self,
        d: &EmpiricalDistribution<FvaSample>,
    ) -> EmpiricalDistribution<FvaSample> {
        match self {
            FvaLeg::Full => d.clone(),
            FvaLeg::Cost => d.map(FvaSample::positive_part),
            FvaLeg::Benefit => d.map(FvaSample::negative_part),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FvaSolution {
    pub leg: FvaLeg,
    pub dual: DualSolution<FvaPsiWitness>,
    /// `∂F` at the returned `α`.
    pub subgradient: SubgradientInterval,
}

impl std::ops::Deref for FvaSolution {
    type Target = DualSolution<FvaPsiWitness>;
    fn deref(&self) -> &Self::Target {
        &self.dual
    }
}

/// Bisection on the sign of `∂F` in `ln α`; `F` is convex so `∂F` is monotone.
fn solve(
    d: &EmpiricalDistribution<FvaSample>,
    delta: f64,
    s3: f64,
    leg: FvaLeg,
    cfg: &SolverConfig,
) -> Result<FvaSolution> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "radius must be >= 0, got {delta}"
        )));
    }
    check_inputs(1.0, s3)?;
    let data = leg.transform(d);
    let baseline = data.mean_payoff();
    let f = |a: f64| a * delta + mean_psi(&data, a, s3);
    let g = |a: f64| subgradient_unchecked(&data, a, delta, s3);
    let finish =
        |alpha: f64, value: f64, boundary: Option<Boundary>, trace: Vec<(f64, f64)>, kink: bool| {
            let witnesses: Vec<FvaPsiWitness> = data
                .samples()
                .par_iter()
                .map(|s| psi_unchecked(s, alpha, s3))
                .collect();
            let mean = ordered_sum(&witnesses.iter().map(|w| w.value).collect::<Vec<_>>())
                / witnesses.len() as f64;
            FvaSolution {
                leg,
                subgradient: g(alpha),
                dual: DualSolution {
                    alpha,
                    value,
                    dual_value: value,
                    delta,
                    s3,
                    baseline,
                    mean_psi: mean,
                    boundary,
                    trace,
                    witnesses,
                    kink_fallback: kink,
                },
            }
        };
    if delta == 0.0 {
        let alpha = cfg.alpha_max;
        return Ok(finish(
            alpha,
            baseline,
            Some(Boundary::Upper),
            vec![(alpha, f(alpha))],
            false,
        ));
    }

    let mut trace = Vec::new();
    let probe = |a: f64, trace: &mut Vec<(f64, f64)>| {
        trace.push((a, f(a)));
        g(a)
    };
    let start = 1.0f64.clamp(cfg.alpha_min, cfg.alpha_max);
    let s = probe(start, &mut trace);
    if s.contains_zero() {
        return Ok(finish(
            start,
            trace[0].1,
            classify(start, cfg),
            trace,
            false,
        ));
    }
    let (mut lo, mut hi) = (start, start);
    if s.hi < 0.0 {
        loop {
            if hi >= cfg.alpha_max {
                let v = f(cfg.alpha_max);
                trace.push((cfg.alpha_max, v));
                return Ok(finish(
                    cfg.alpha_max,
                    v,
                    Some(Boundary::Upper),
                    trace,
                    false,
                ));
            }
            let next = (hi * 10.0).min(cfg.alpha_max);
            let sg = probe(next, &mut trace);
            if sg.contains_zero() {
                let v = trace.last().unwrap().1;
                return Ok(finish(next, v, classify(next, cfg), trace, false));
            }
            lo = hi;
            hi = next;
            if sg.lo > 0.0 {
                break;
            }
        }
    } else {
        loop {
            if lo <= cfg.alpha_min {
                let v = f(cfg.alpha_min);
                trace.push((cfg.alpha_min, v));
                return Ok(finish(
                    cfg.alpha_min,
                    v,
                    Some(Boundary::Lower),
                    trace,
                    false,
                ));
            }
            let next = (lo / 10.0).max(cfg.alpha_min);
            let sg = probe(next, &mut trace);
            if sg.contains_zero() {
                let v = trace.last().unwrap().1;
                return Ok(finish(next, v, classify(next, cfg), trace, false));
            }
            hi = lo;
            lo = next;
            if sg.hi < 0.0 {
                break;
            }
        }
    }
    while (hi / lo).ln() > cfg.bisection_tol {
        let mid = (lo * hi).sqrt();
        let sg = probe(mid, &mut trace);
        if sg.contains_zero() {
            let v = trace.last().unwrap().1;
            return Ok(finish(mid, v, classify(mid, cfg), trace, false));
        }
        if sg.hi < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the sign change sits on a kink narrower than the tolerance
    golden_log(&mut |a| f(a), lo, hi, cfg.bisection_tol * 1e-2, &mut trace);
    let (alpha, value) = best_of(&trace);
    Ok(finish(alpha, value, classify(alpha, cfg), trace, true))
}

pub fn minimize_dual_fva(
    d: &EmpiricalDistribution<FvaSample>,
    delta: f64,
    s3: f64,
) -> Result<FvaSolution> {
    solve(d, delta, s3, FvaLeg::Full, &SolverConfig::default())
}

pub fn minimize_dual_fva_with(
    d: &EmpiricalDistribution<FvaSample>,
    delta: f64,
    s3: f64,
    leg: FvaLeg,
    cfg: &SolverConfig,
) -> Result<FvaSolution> {
    solve(d, delta, s3, leg, cfg)
}

pub fn robust_fca(
    d: &EmpiricalDistribution<FvaSample>,
    delta: f64,
    s3: f64,
) -> Result<FvaSolution> {
    solve(d, delta, s3, FvaLeg::Cost, &SolverConfig::default())
}

pub fn robust_fba(
    d: &EmpiricalDistribution<FvaSample>,
    delta: f64,
    s3: f64,
) -> Result<FvaSolution> {
    solve(d, delta, s3, FvaLeg::Benefit, &SolverConfig::default())
}

/// `(block length, shift on the block)`
type FvaMove = (usize, f64);

/// Each block length unshifted and with the `α`-optimal shift `1/(2α)` on every
/// funded date.
fn candidates(s: &FvaSample, alpha: f64, s3: f64) -> Vec<Candidate<FvaMove>> {
    let z = s.z();
    let big_l = s.block();
    let w = 0.5 / alpha;
    let mut out = Vec::with_capacity(2 * z.len() + 2);
    let mut prefix = 0.0;
    for l in 0..=z.len() {
        if l > 0 {
            prefix += z[l - 1];
        }
        let moved = s3 * l.abs_diff(big_l) as f64;
        out.push(Candidate {
            cost: moved,
            payoff: prefix,
            desc: (l, 0.0),
        });
        if l > 0 {
            out.push(Candidate {
                cost: l as f64 * w * w + moved,
                payoff: prefix + l as f64 * w,
                desc: (l, w),
            });
        }
    }
    out
}

pub fn recover_worst_case_fva(
    sol: &FvaSolution,
    d: &EmpiricalDistribution<FvaSample>,
) -> Result<WorstCaseDistribution<FvaSample>> {
    let data = sol.leg.transform(d);
    if sol.delta == 0.0 {
        return Ok(WorstCaseDistribution::empirical(data.samples()));
    }
    if sol.boundary.is_some() {
        return Err(Error::BoundarySolution);
    }
    let s3 = sol.s3;
    let samples = data.samples();
    let cands_at =
        |a: f64| -> Vec<_> { samples.par_iter().map(|s| candidates(s, a, s3)).collect() };
    Ok(fill_at_budget(
        sol.alpha,
        sol.delta,
        cands_at,
        |i, &(l, w): &FvaMove| {
            let mut z = samples[i].z().to_vec();
            for v in &mut z[..l] {
                *v += w;
            }
            FvaSample::new(z, l).expect("moves keep sample invariants")
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_date_examples() {
        let w = psi_alpha_fva(&FvaSample::new(vec![1.0], 1).unwrap(), 1.0, 1.0).unwrap();
        assert!((w.value - 1.25).abs() < 1e-15);
        assert_eq!(w.l_star, 1);
        let w = psi_alpha_fva(&FvaSample::new(vec![-10.0], 0).unwrap(), 1.0, 1.0).unwrap();
        assert_eq!(w.value, 0.0);
        assert_eq!(w.l_star, 0);
    }

    #[test]
    fn large_alpha_keeps_block() {
        let s = FvaSample::new(vec![0.3, -0.1, 0.4], 2).unwrap();
        let w = psi_alpha_fva(&s, 1e6, 1.0).unwrap();
        assert_eq!(w.l_star, 2);
        assert!((w.value - s.payoff()).abs() < 1e-6);
    }

    #[test]
    fn witness_value_matches_its_point() {
        let s = FvaSample::new(vec![0.3, -0.1, 0.4, 0.2], 1).unwrap();
        for &alpha in &[0.05, 0.5, 3.0] {
            let w = psi_alpha_fva(&s, alpha, 0.2).unwrap();
            let p = w.perturbed(&s);
            let c = crate::empirical::cost_fva(&p, &s, 0.2).unwrap();
            assert!((p.payoff() - alpha * c - w.value).abs() < 1e-12);
            assert!((w.transport_cost(0.2) - c).abs() < 1e-12);
        }
    }
}
