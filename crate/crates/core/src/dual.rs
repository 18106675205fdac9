//! One-dimensional dual minimization and worst-case recovery shared by the
//! bilateral and funding problems.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::empirical::Sample;

/// Search domain and tolerance for the multiplier `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Relative tolerance on `α` (golden section).
    pub rel_tol: f64,
    /// Relative tolerance on `α` for subgradient bisection.
    pub bisection_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha_min: 1e-8,
            alpha_max: 1e8,
            rel_tol: 1e-8,
            bisection_tol: 1e-10,
        }
    }
}

/// Which end of the `α` domain the minimizer hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// `F` still decreasing at `alpha_max`; the `δ = 0` limit lands here.
    Upper,
    /// `F` still increasing at `alpha_min`.
    Lower,
}

/// Result of minimizing `F(α) = αδ + (1/N) Σ Ψ_α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution<W> {
    pub alpha: f64,
    /// Robust value in reporting convention (DVA carries a minus sign).
    pub value: f64,
    /// `F(α*)`; equals `alpha * delta + mean_psi` except in the exact `δ = 0` limit.
    pub dual_value: f64,
    pub delta: f64,
    pub s3: f64,
    /// Mean payoff under `Φ_N` in the same convention as `dual_value`.
    pub baseline: f64,
    pub mean_psi: f64,
    pub boundary: Option<Boundary>,
    /// Every `(α, F(α))` evaluated by the driver, in evaluation order.
    pub trace: Vec<(f64, f64)>,
    /// Per-sample witnesses at `alpha`.
    pub witnesses: Vec<W>,
    /// Set when the subgradient bisection ended on a kink and a golden-section
    /// polish picked the final point.
    pub kink_fallback: bool,
}

impl<W> DualSolution<W> {
    /// `mean[Ψ_{α*} − payoff]`, the non-negative part of the robust premium.
    pub fn penalty_gap(&self) -> f64 {
        self.mean_psi - self.baseline
    }
}

pub(crate) struct Minimum {
    pub alpha: f64,
    pub value: f64,
    pub boundary: Option<Boundary>,
    pub trace: Vec<(f64, f64)>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section search on `ln α` over `[lo, hi]`, appending to `trace`.
pub(crate) fn golden_log(
    f: &mut dyn FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    trace: &mut Vec<(f64, f64)>,
) {
    let mut eval = |a: f64, trace: &mut Vec<(f64, f64)>| {
        let v = f(a);
        trace.push((a, v));
        v
    };
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = eval(c.exp(), trace);
    let mut fd = eval(d.exp(), trace);
    while b - a > rel_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = eval(c.exp(), trace);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = eval(d.exp(), trace);
        }
    }
}

pub(crate) fn best_of(trace: &[(f64, f64)]) -> (f64, f64) {
    trace
        .iter()
        .copied()
        .min_by(|p, q| {
            p.1.partial_cmp(&q.1)
                .unwrap_or(Ordering::Equal)
                .then(p.0.total_cmp(&q.0))
        })
        .expect("trace is non-empty")
}

pub(crate) fn classify(alpha: f64, cfg: &SolverConfig) -> Option<Boundary> {
    if alpha >= cfg.alpha_max * (1.0 - 1e-6) {
        Some(Boundary::Upper)
    } else if alpha <= cfg.alpha_min * (1.0 + 1e-6) {
        Some(Boundary::Lower)
    } else {
        None
    }
}

/// Brackets the minimizer of a convex `f` by decades from `α = 1`, then runs a
/// golden-section search in `ln α`.
pub(crate) fn minimize_convex(f: &mut dyn FnMut(f64) -> f64, cfg: &SolverConfig) -> Minimum {
    let mut trace = Vec::new();
    let mut eval = |a: f64, trace: &mut Vec<(f64, f64)>| {
        let v = f(a);
        trace.push((a, v));
        v
    };
    let start = 1.0f64.clamp(cfg.alpha_min, cfg.alpha_max);
    let f0 = eval(start, &mut trace);
    let up = (start * 10.0).min(cfg.alpha_max);
    let f_up = eval(up, &mut trace);
    let (lo, hi);
    if f_up < f0 {
        // decreasing: walk right
        let (mut prev, mut mid, mut fmid) = (start, up, f_up);
        loop {
            if mid >= cfg.alpha_max {
                lo = prev;
                hi = mid;
                break;
            }
            let next = (mid * 10.0).min(cfg.alpha_max);
            let fnext = eval(next, &mut trace);
            if fnext >= fmid {
                lo = prev;
                hi = next;
                break;
            }
            prev = mid;
            mid = next;
            fmid = fnext;
        }
    } else {
        let (mut next, mut mid, mut fmid) = (up, start, f0);
        loop {
            if mid <= cfg.alpha_min {
                lo = mid;
                hi = next;
                break;
            }
            let prev = (mid / 10.0).max(cfg.alpha_min);
            let fprev = eval(prev, &mut trace);
            if fprev >= fmid {
                lo = prev;
                hi = next;
                break;
            }
            next = mid;
            mid = prev;
            fmid = fprev;
        }
    }
    golden_log(&mut |a| f(a), lo, hi, cfg.rel_tol, &mut trace);
    let (alpha, value) = best_of(&trace);
    Minimum {
        alpha,
        value,
        boundary: classify(alpha, cfg),
        trace,
    }
}

/// One sample's state in a worst-case distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint<S> {
    pub weight: f64,
    /// Index of the empirical sample this point was transported from.
    pub origin: usize,
    pub point: S,
}

/// Sample whose `1/N` mass is split between two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub sample: usize,
    /// Mass on the further (costlier) point; the rest stays on the nearer one.
    pub theta: f64,
}

/// Measure on at most `N + 1` points attaining the robust value within budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseDistribution<S> {
    pub points: Vec<WeightedPoint<S>>,
    pub split: Option<Split>,
}

impl<S: Sample> WorstCaseDistribution<S> {
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    pub fn expected_payoff(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.weight * p.point.payoff())
            .sum()
    }

    /// Transport cost to `originals` along the recorded coupling.
    pub fn transport_cost(
        &self,
        originals: &[S],
        cost: impl Fn(&S, &S) -> crate::error::Result<f64>,
    ) -> crate::error::Result<f64> {
        let mut total = 0.0;
        for p in &self.points {
            total += p.weight * cost(&p.point, &originals[p.origin])?;
        }
        Ok(total)
    }

    /// The empirical measure itself.
    pub fn empirical(originals: &[S]) -> Self {
        let w = 1.0 / originals.len() as f64;
        Self {
            points: originals
                .iter()
                .enumerate()
                .map(|(i, s)| WeightedPoint {
                    weight: w,
                    origin: i,
                    point: s.clone(),
                })
                .collect(),
            split: None,
        }
    }
}

/// A reachable perturbation of one sample: `(transport cost, payoff, descriptor)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate<D> {
    pub cost: f64,
    pub payoff: f64,
    pub desc: D,
}

/// Upper concave hull of `(cost, payoff)` starting at the zero-cost original.
fn upper_hull<D: Copy>(mut cands: Vec<Candidate<D>>) -> Vec<Candidate<D>> {
    cands.sort_by(|p, q| {
        p.cost
            .total_cmp(&q.cost)
            .then(q.payoff.total_cmp(&p.payoff))
    });
    let mut hull: Vec<Candidate<D>> = Vec::new();
    for c in cands {
        match hull.last() {
            None => {
                hull.push(c);
                continue;
            }
            Some(last) if c.payoff <= last.payoff => continue,
            _ => {}
        }
        while hull.len() >= 2 {
            let p = hull[hull.len() - 2];
            let q = hull[hull.len() - 1];
            // drop q if it lies on or below the chord p -> c
            let cross = (q.cost - p.cost) * (c.payoff - p.payoff)
                - (q.payoff - p.payoff) * (c.cost - p.cost);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }
    hull
}

/// Mean cost of the `payoff − α·cost` maximizers, smallest and largest over ties.
fn argmax_cost<D>(cands: &[Vec<Candidate<D>>], alpha: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (0.0, 0.0);
    for c in cands {
        let best = c
            .iter()
            .map(|p| p.payoff - alpha * p.cost)
            .fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * (1.0 + best.abs());
        let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in c.iter().filter(|p| p.payoff - alpha * p.cost >= best - tol) {
            a = a.min(p.cost);
            b = b.max(p.cost);
        }
        lo += a;
        hi += b;
    }
    let n = cands.len() as f64;
    (lo / n, hi / n)
}

/// Worst-case measure with transport cost `δ`. `α*` is only known to the
/// solver tolerance, so first shrink `[α_L, α_R]` around it until the
/// maximizer costs bracket `δ`, then fill over the candidates of both ends.
pub(crate) fn fill_at_budget<S, D: Copy>(
    alpha: f64,
    delta: f64,
    cands_at: impl Fn(f64) -> Vec<Vec<Candidate<D>>>,
    materialize: impl Fn(usize, &D) -> S,
) -> WorstCaseDistribution<S> {
    const MAX_STEPS: usize = 200;
    let (lo0, hi0) = argmax_cost(&cands_at(alpha), alpha);
    let (mut al, mut ar) = (alpha, alpha);
    if hi0 < delta {
        // maximizers too cheap: move α down until they are not
        let mut step = 1e-9;
        for _ in 0..MAX_STEPS {
            al = alpha / (1.0 + step);
            if argmax_cost(&cands_at(al), al).1 >= delta || al <= 1e-300 {
                break;
            }
            ar = al;
            step *= 2.0;
        }
    } else if lo0 > delta {
        let mut step = 1e-9;
        for _ in 0..MAX_STEPS {
            ar = alpha * (1.0 + step);
            if argmax_cost(&cands_at(ar), ar).0 <= delta || !ar.is_finite() {
                break;
            }
            al = ar;
            step *= 2.0;
        }
    }
    for _ in 0..MAX_STEPS {
        if ar / al - 1.0 <= 4.0 * f64::EPSILON {
            break;
        }
        let mid = (al * ar).sqrt();
        if mid <= al || mid >= ar {
            break;
        }
        let (lo, hi) = argmax_cost(&cands_at(mid), mid);
        if hi < delta {
            ar = mid;
        } else if lo > delta {
            al = mid;
        } else {
            al = mid;
            ar = mid;
        }
    }
    let mut cands = cands_at(al);
    if ar != al {
        for (c, extra) in cands.iter_mut().zip(cands_at(ar)) {
            c.extend(extra);
        }
    }
    greedy_fill(cands, delta, materialize)
}

/// Fractional-knapsack fill of the budget `N δ` over all samples' hull segments,
/// steepest payoff-per-cost first. `cands[i]` must contain the original point
/// at cost 0.
pub(crate) fn greedy_fill<S, D: Copy>(
    cands: Vec<Vec<Candidate<D>>>,
    delta: f64,
    materialize: impl Fn(usize, &D) -> S,
) -> WorstCaseDistribution<S> {
    let n = cands.len();
    let hulls: Vec<Vec<Candidate<D>>> = cands.into_iter().map(upper_hull).collect();
    struct Seg {
        sample: usize,
        idx: usize,
        slope: f64,
        dc: f64,
    }
    let mut segs = Vec::new();
    for (i, h) in hulls.iter().enumerate() {
        for j in 1..h.len() {
            let dc = h[j].cost - h[j - 1].cost;
            let slope = (h[j].payoff - h[j - 1].payoff) / dc;
            segs.push(Seg {
                sample: i,
                idx: j,
                slope,
                dc,
            });
        }
    }
    segs.sort_by(|a, b| {
        b.slope
            .total_cmp(&a.slope)
            .then(a.sample.cmp(&b.sample))
            .then(a.idx.cmp(&b.idx))
    });
    let mut level = vec![0usize; n];
    let mut budget = delta * n as f64;
    let mut split = None;
    for s in &segs {
        if budget <= 0.0 {
            break;
        }
        if s.idx != level[s.sample] + 1 {
            continue;
        }
        if s.dc <= budget {
            budget -= s.dc;
            level[s.sample] = s.idx;
        } else {
            split = Some(Split {
                sample: s.sample,
                theta: budget / s.dc,
            });
            budget = 0.0;
        }
    }
    let w = 1.0 / n as f64;
    let mut points = Vec::with_capacity(n + 1);
    for (i, h) in hulls.iter().enumerate() {
        let here = &h[level[i]];
        match split {
            Some(sp) if sp.sample == i => {
                points.push(WeightedPoint {
                    weight: w * (1.0 - sp.theta),
                    origin: i,
                    point: materialize(i, &here.desc),
                });
                points.push(WeightedPoint {
                    weight: w * sp.theta,
                    origin: i,
                    point: materialize(i, &h[level[i] + 1].desc),
                });
            }
            _ => points.push(WeightedPoint {
                weight: w,
                origin: i,
                point: materialize(i, &here.desc),
            }),
        }
    }
    let split = split.map(|s| Split {
        theta: s.theta * w,
        ..s
    });
    WorstCaseDistribution { points, split }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_kinked_minimum() {
        let cfg = SolverConfig::default();
        let mut f = |a: f64| (a.ln() - 2.0).abs() + 3.0;
        let m = minimize_convex(&mut f, &cfg);
        assert!((m.alpha / 2f64.exp() - 1.0).abs() < 1e-7);
        assert!(m.boundary.is_none());
    }

    #[test]
    fn decreasing_objective_hits_upper_cap() {
        let cfg = SolverConfig::default();
        let mut f = |a: f64| 1.0 / a;
        let m = minimize_convex(&mut f, &cfg);
        assert_eq!(m.boundary, Some(Boundary::Upper));
        let mut g = |a: f64| a;
        assert_eq!(
            minimize_convex(&mut g, &cfg).boundary,
            Some(Boundary::Lower)
        );
    }

    #[test]
    fn hull_drops_dominated_points() {
        let c = |cost, payoff| Candidate {
            cost,
            payoff,
            desc: (),
        };
        let h = upper_hull(vec![
            c(0.0, 0.0),
            c(1.0, 0.2),
            c(2.0, 2.0),
            c(3.0, 1.0),
            c(4.0, 2.5),
        ]);
        let pts: Vec<(f64, f64)> = h.iter().map(|p| (p.cost, p.payoff)).collect();
        assert_eq!(pts, vec![(0.0, 0.0), (2.0, 2.0), (4.0, 2.5)]);
    }
}
