//! Brute-force reference implementations for testing.
//!
//! Nothing here shares case logic with the solvers. The per-sample suprema
//! enumerate every indicator state and solve each coordinate with the scalar
//! forms of [`scalar_subproblem`]; the dual scan evaluates `F` on a dense
//! log-spaced grid.

use serde::{Deserialize, Serialize};

use crate::empirical::{BcvaSample, EmpiricalDistribution, FvaSample};
use crate::error::{Error, Result};

/// Largest grid length the enumerations accept.
pub const MAX_ENUMERATION_DIM: usize = 6;

/// The scalar problems `sup_w f(w) − α w²` that the inner suprema reduce to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScalarProblem {
    /// `sup_w w‖y‖ − αw²`.
    Quadratic { y_norm: f64 },
    /// `sup_{w ≤ x} w‖y‖ − αw²`.
    CappedQuadratic { x: f64, y_norm: f64 },
    /// `sup_w (w + xy)⁺ − αw²`.
    PositivePart { xy: f64 },
    /// `sup_w (w + xy)⁻ − αw²` with `(·)⁻ = min(·, 0)`.
    NegativePart { xy: f64 },
    /// `sup_w (w + x_{τ₁})⁻ − αw²`, the negative part read at a moved date.
    MovedNegativePart { x_tau1: f64, x_tau2: f64, xy: f64 },
}

impl ScalarProblem {
    fn objective(&self, w: f64, alpha: f64) -> f64 {
        let pen = alpha * w * w;
        match *self {
            ScalarProblem::Quadratic { y_norm } => w * y_norm - pen,
            ScalarProblem::CappedQuadratic { y_norm, .. } => w * y_norm - pen,
            ScalarProblem::PositivePart { xy } => (w + xy).max(0.0) - pen,
            ScalarProblem::NegativePart { xy } => (w + xy).min(0.0) - pen,
            ScalarProblem::MovedNegativePart { x_tau1, .. } => (w + x_tau1).min(0.0) - pen,
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            ScalarProblem::Quadratic { y_norm } => y_norm.abs(),
            ScalarProblem::CappedQuadratic { x, y_norm } => x.abs().max(y_norm.abs()),
            ScalarProblem::PositivePart { xy } | ScalarProblem::NegativePart { xy } => xy.abs(),
            ScalarProblem::MovedNegativePart { x_tau1, x_tau2, xy } => {
                x_tau1.abs().max(x_tau2.abs()).max(xy.abs())
            }
        }
    }

    fn upper(&self) -> f64 {
        match *self {
            ScalarProblem::CappedQuadratic { x, .. } => x,
            _ => f64::INFINITY,
        }
    }
}

fn neg_part_form(x_at: f64, inner: f64, alpha: f64) -> f64 {
    if x_at < -0.5 / alpha || x_at > 0.0 {
        (0.25 / alpha + inner).min(0.0)
    } else {
        -alpha * x_at * x_at
    }
}

/// Closed-form solution of each scalar problem.
pub fn scalar_subproblem(p: ScalarProblem, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    Ok(match p {
        ScalarProblem::Quadratic { y_norm } => y_norm * y_norm / (4.0 * alpha),
        ScalarProblem::CappedQuadratic { x, y_norm } => {
            let m = x.min(y_norm / (2.0 * alpha));
            y_norm * m - alpha * m * m
        }
        ScalarProblem::PositivePart { xy } => (0.25 / alpha + xy).max(0.0),
        ScalarProblem::NegativePart { xy } => neg_part_form(xy, xy, alpha),
        ScalarProblem::MovedNegativePart { x_tau1, x_tau2, xy } => {
            neg_part_form(x_tau1, xy + (x_tau1 - x_tau2), alpha)
        }
    })
}

/// Numerical maximization of the same problem: a dense grid of `10⁵` points
/// over `|w| ≤ 10/α · max(1, scale)`, then a golden refinement between the
/// neighbours of the best grid point.
pub fn scalar_subproblem_grid(p: ScalarProblem, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    const POINTS: usize = 100_000;
    let half = 10.0 / alpha * p.scale().max(1.0);
    let hi = p.upper().min(half);
    let lo = -half.max(hi.abs() + half);
    let step = (hi - lo) / (POINTS - 1) as f64;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0usize);
    for k in 0..POINTS {
        let v = p.objective(lo + k as f64 * step, alpha);
        if v > best {
            best = v;
            arg = k;
        }
    }
    let a = lo + arg.saturating_sub(1) as f64 * step;
    let b = (lo + (arg + 1) as f64 * step).min(hi);
    let refined = golden_max(|w| p.objective(w, alpha), a, b, 200);
    Ok(best.max(refined))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = fc.max(fd).max(f(a)).max(f(b));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
    }
    best
}

fn check(n: usize, alpha: f64, s3: f64) -> Result<()> {
    if n > MAX_ENUMERATION_DIM {
        return Err(Error::TooLarge {
            what: "grid length",
            cap: MAX_ENUMERATION_DIM,
        });
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    if !(s3 > 0.0) || !s3.is_finite() {
        return Err(Error::InvalidInput(format!("S3 must be > 0, got {s3}")));
    }
    Ok(())
}

/// Squared distance between two default indicators given as indices.
fn indicator_sq(a: usize, b: usize, n: usize) -> f64 {
    let mut d = 0.0;
    for k in 1..=n {
        let u = f64::from(a == k);
        let v = f64::from(b == k);
        d += (u - v) * (u - v);
    }
    d
}

/// Enumerates every `(τ_C, τ_F)` pair. A leg pays only when its party defaults
/// strictly first; `counterparty = false` drops the counterparty leg.
pub fn brute_psi_bcva_legs(
    sample: &BcvaSample,
    alpha: f64,
    s3: f64,
    counterparty: bool,
) -> Result<f64> {
    let n = sample.n();
    check(n, alpha, s3)?;
    let x = sample.x();
    let mut best = f64::NEG_INFINITY;
    for a in 0..=n {
        for b in 0..=n {
            let mut v = 0.0;
            if counterparty && a != 0 && (b == 0 || a < b) {
                v += scalar_subproblem(ScalarProblem::PositivePart { xy: x[a - 1] }, alpha)?;
            }
            if b != 0 && (a == 0 || b < a) {
                v += scalar_subproblem(ScalarProblem::NegativePart { xy: x[b - 1] }, alpha)?;
            }
            let moved = indicator_sq(a, sample.tau_c(), n) + indicator_sq(b, sample.tau_f(), n);
            best = best.max(v - alpha * s3 * moved);
        }
    }
    Ok(best)
}

pub fn brute_psi_bcva(sample: &BcvaSample, alpha: f64, s3: f64) -> Result<f64> {
    brute_psi_bcva_legs(sample, alpha, s3, true)
}

/// Enumerates every survival block length.
pub fn brute_psi_fva(sample: &FvaSample, alpha: f64, s3: f64) -> Result<f64> {
    let n = sample.n();
    check(n, alpha, s3)?;
    let z = sample.z();
    let big_l = sample.block();
    let mut best = f64::NEG_INFINITY;
    for l in 0..=n {
        let mut v = 0.0;
        for zk in &z[..l] {
            v += zk + scalar_subproblem(ScalarProblem::Quadratic { y_norm: 1.0 }, alpha)?;
        }
        let moved: f64 = (0..n).map(|k| f64::from((k < l) != (k < big_l))).sum();
        best = best.max(v - alpha * s3 * moved);
    }
    Ok(best)
}

/// Problem the dual scan evaluates. The DVA variant scans the supremum of
/// `E⟨X⁻, Y_F⟩` on the firm leg, before the sign flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanKind {
    Bcva,
    UnilateralCva,
    UnilateralDva,
    Fva,
    Fca,
    Fba,
}

pub enum ScanData<'a> {
    Bcva(&'a EmpiricalDistribution<BcvaSample>),
    Fva(&'a EmpiricalDistribution<FvaSample>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMinimum {
    pub alpha: f64,
    pub value: f64,
}

fn objective(
    data: &ScanData<'_>,
    kind: ScanKind,
    delta: f64,
    s3: f64,
) -> Result<Box<dyn Fn(f64) -> f64>> {
    let bad = || Error::InvalidInput(format!("scan kind {kind:?} does not match the data"));
    Ok(match (data, kind) {
        (ScanData::Bcva(d), ScanKind::Bcva | ScanKind::UnilateralCva | ScanKind::UnilateralDva) => {
            let samples: Vec<BcvaSample> = match kind {
                ScanKind::Bcva => d.samples().to_vec(),
                ScanKind::UnilateralCva => {
                    d.samples().iter().map(|s| s.counterparty_leg()).collect()
                }
                _ => d.samples().iter().map(|s| s.firm_leg()).collect(),
            };
            for s in &samples {
                check(s.n(), 1.0, s3)?;
            }
            let cpty = kind != ScanKind::UnilateralDva;
            Box::new(move |a| {
                let sum: f64 = samples
                    .iter()
                    .map(|s| brute_psi_bcva_legs(s, a, s3, cpty).expect("checked"))
                    .sum();
                a * delta + sum / samples.len() as f64
            })
        }
        (ScanData::Fva(d), ScanKind::Fva | ScanKind::Fca | ScanKind::Fba) => {
            let samples: Vec<FvaSample> = match kind {
                ScanKind::Fva => d.samples().to_vec(),
                ScanKind::Fca => d.samples().iter().map(|s| s.positive_part()).collect(),
                _ => d.samples().iter().map(|s| s.negative_part()).collect(),
            };
            for s in &samples {
                check(s.n(), 1.0, s3)?;
            }
            Box::new(move |a| {
                let sum: f64 = samples
                    .iter()
                    .map(|s| brute_psi_fva(s, a, s3).expect("checked"))
                    .sum();
                a * delta + sum / samples.len() as f64
            })
        }
        _ => return Err(bad()),
    })
}

/// Evaluates `F(α) = αδ + mean Ψ_α` at `points` log-spaced values of `α`.
pub fn dual_trace(
    data: &ScanData<'_>,
    kind: ScanKind,
    delta: f64,
    s3: f64,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    if points < 2 || !(lo > 0.0) || !(hi > lo) {
        return Err(Error::InvalidInput(
            "scan needs 0 < lo < hi and 2+ points".into(),
        ));
    }
    let f = objective(data, kind, delta, s3)?;
    let (l0, l1) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|k| {
            let a = (l0 + (l1 - l0) * k as f64 / (points - 1) as f64).exp();
            (a, f(a))
        })
        .collect())
}

/// Grid minimum of `F` over `α ∈ [1e−8, 1e8]`: `10⁵` log-spaced points, then
/// three zoom passes of `10⁴` points between the neighbours of the best one.
pub fn grid_dual_scan(
    data: &ScanData<'_>,
    kind: ScanKind,
    delta: f64,
    s3: f64,
) -> Result<GridMinimum> {
    let f = objective(data, kind, delta, s3)?;
    let (mut lo, mut hi) = (1e-8f64.ln(), 1e8f64.ln());
    let mut best = GridMinimum {
        alpha: f64::NAN,
        value: f64::INFINITY,
    };
    for &points in &[100_000usize, 10_000, 10_000, 10_000] {
        let step = (hi - lo) / (points - 1) as f64;
        let mut arg = 0;
        let mut local = f64::INFINITY;
        for k in 0..points {
            let a = (lo + k as f64 * step).exp();
            let v = f(a);
            if v < local {
                local = v;
                arg = k;
            }
            if v < best.value {
                best = GridMinimum { alpha: a, value: v };
            }
        }
        let centre = lo + arg as f64 * step;
        let (nlo, nhi) = (
            (centre - step).max(1e-8f64.ln()),
            (centre + step).min(1e8f64.ln()),
        );
        lo = nlo;
        hi = nhi;
    }
    Ok(best)
}

/// Minimum-cost perfect matching by enumerating all `m!` permutations.
/// Returns the average matched cost and the assignment `row → column`.
pub fn brute_min_matching(cost: &[Vec<f64>]) -> Result<(f64, Vec<usize>)> {
    let m = cost.len();
    if m == 0 {
        return Err(Error::Empty("cost matrix"));
    }
    if m > 9 {
        return Err(Error::TooLarge {
            what: "matching size",
            cap: 9,
        });
    }
    if cost.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidInput("cost matrix must be square".into()));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = (f64::INFINITY, perm.clone());
    permute(&mut perm, 0, cost, &mut best);
    Ok((best.0 / m as f64, best.1))
}

fn permute(perm: &mut Vec<usize>, k: usize, cost: &[Vec<f64>], best: &mut (f64, Vec<usize>)) {
    if k == perm.len() {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        if total < best.0 {
            *best = (total, perm.clone());
        }
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, cost, best);
        perm.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let r1 = scalar_subproblem(ScalarProblem::Quadratic { y_norm: 1.0 }, 0.5).unwrap();
        assert_eq!(r1, 0.5);
        let r3 = scalar_subproblem(ScalarProblem::PositivePart { xy: -1.0 }, 1.0).unwrap();
        assert_eq!(r3, 0.0);
    }

    #[test]
    fn rows_match_grid() {
        let probs = [
            ScalarProblem::Quadratic { y_norm: 1.0 },
            ScalarProblem::CappedQuadratic {
                x: 0.1,
                y_norm: 1.0,
            },
            ScalarProblem::CappedQuadratic {
                x: -2.0,
                y_norm: 1.0,
            },
            ScalarProblem::PositivePart { xy: 0.3 },
            ScalarProblem::PositivePart { xy: -3.0 },
            ScalarProblem::NegativePart { xy: -0.2 },
            ScalarProblem::NegativePart { xy: -3.0 },
            ScalarProblem::NegativePart { xy: 2.0 },
            ScalarProblem::MovedNegativePart {
                x_tau1: -0.4,
                x_tau2: 1.0,
                xy: 1.0,
            },
            ScalarProblem::MovedNegativePart {
                x_tau1: -5.0,
                x_tau2: 1.0,
                xy: 1.0,
            },
        ];
        for p in probs {
            for &alpha in &[0.01, 0.7, 1.0, 40.0] {
                let exact = scalar_subproblem(p, alpha).unwrap();
                let grid = scalar_subproblem_grid(p, alpha).unwrap();
                assert!(
                    (exact - grid).abs() <= 1e-6,
                    "{p:?} α={alpha}: {exact} vs {grid}"
                );
            }
        }
    }

    #[test]
    fn enumeration_limits() {
        let s = BcvaSample::new(vec![0.0; 7], 0, 0).unwrap();
        assert!(matches!(
            brute_psi_bcva(&s, 1.0, 1.0),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn permutations_find_diagonal() {
        let c = vec![
            vec![0.0, 5.0, 5.0],
            vec![5.0, 0.0, 5.0],
            vec![5.0, 5.0, 0.0],
        ];
        let (v, p) = brute_min_matching(&c).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(p, vec![0, 1, 2]);
    }
}
