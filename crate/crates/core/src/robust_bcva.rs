//! Worst-case bilateral CVA and its unilateral reductions.
//!
//! For each sample the inner supremum `Ψ_α` is the best of finitely many
//! candidate indicator moves. Moving the counterparty default to date `a`
//! (ahead of any firm default) pays `[x_a + 1/(4α)]⁺`; moving the firm default
//! to `b` pays the firm-leg analogue `G⁻(x_b)`; removing both pays 0. Each move
//! is charged `α S₃ K`, where `K` counts the flipped indicator entries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{
    fill_at_budget, minimize_convex, Boundary, Candidate, DualSolution, SolverConfig,
    WorstCaseDistribution,
};
use crate::empirical::{indicator_distance, BcvaSample, EmpiricalDistribution};
use crate::error::{Error, Result};
use crate::numeric::ordered_sum;

/// Winning sub-case of `Ψ_α`.
///
/// `a`-cases pay the counterparty leg, `b`-cases the firm leg, and `c`-cases
/// pay nothing (both defaults removed). The digit follows which indicators
/// moved: 1 neither, 2 counterparty only, 3 firm only, 4 both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    C1a,
    C1b,
    C1c,
    C2a,
    C2b,
    C2c,
    C3a,
    C3b,
    C3c,
    C4a,
    C4b,
    C4c,
}

impl CaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::C1a => "1a",
            CaseLabel::C1b => "1b",
            CaseLabel::C1c => "1c",
            CaseLabel::C2a => "2a",
            CaseLabel::C2b => "2b",
            CaseLabel::C2c => "2c",
            CaseLabel::C3a => "3a",
            CaseLabel::C3b => "3b",
            CaseLabel::C3c => "3c",
            CaseLabel::C4a => "4a",
            CaseLabel::C4b => "4b",
            CaseLabel::C4c => "4c",
        }
    }
}

/// Which payoff legs the adversary is paid on. Unilateral DVA masks the
/// counterparty leg; otherwise creating a counterparty default on a zero
/// exposure would still earn `1/(4α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegMask {
    pub counterparty: bool,
    pub firm: bool,
}

impl LegMask {
    pub const BOTH: LegMask = LegMask {
        counterparty: true,
        firm: true,
    };
    pub const FIRM_ONLY: LegMask = LegMask {
        counterparty: false,
        firm: true,
    };
}

impl Default for LegMask {
    fn default() -> Self {
        Self::BOTH
    }
}

/// Maximizer of `Ψ_α` for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiWitness {
    pub value: f64,
    pub case: CaseLabel,
    /// Number of flipped indicator entries.
    pub k: u8,
    /// Perturbed counterparty default index.
    pub tau_c: usize,
    /// Perturbed firm default index.
    pub tau_f: usize,
    /// Date whose exposure is paid (0 for the `c`-cases).
    pub tau1: usize,
    /// `u*_{τ1} − x_{τ1}`; all other coordinates are unchanged.
    pub shift: f64,
}

impl PsiWitness {
    pub fn perturbed(&self, sample: &BcvaSample) -> BcvaSample {
        let mut x = sample.x().to_vec();
        if self.tau1 > 0 {
            x[self.tau1 - 1] += self.shift;
        }
        BcvaSample::new(x, self.tau_c, self.tau_f).expect("witness keeps sample invariants")
    }

    pub fn transport_cost(&self, s3: f64) -> f64 {
        self.shift * self.shift + s3 * self.k as f64
    }
}

/// `sup_u u⁺ − α(u − x)²` and its maximizing shift.
#[inline]
pub(crate) fn g_counterparty(x: f64, alpha: f64) -> (f64, f64) {
    let v = x + 0.25 / alpha;
    if v > 0.0 {
        (v, 0.5 / alpha)
    } else {
        (0.0, 0.0)
    }
}

/// `sup_u min(u, 0) − α(u − x)²` and its maximizing shift.
#[inline]
pub(crate) fn g_firm(x: f64, alpha: f64) -> (f64, f64) {
    if x >= 0.0 {
        (0.0, 0.0)
    } else if x >= -0.5 / alpha {
        (-alpha * x * x, -x)
    } else {
        (x + 0.25 / alpha, 0.5 / alpha)
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

/// `Ψ_α` with both legs paid.
pub fn psi_alpha_bcva(sample: &BcvaSample, alpha: f64, s3: f64) -> Result<PsiWitness> {
    psi_alpha_bcva_masked(sample, alpha, s3, LegMask::BOTH)
}

pub fn psi_alpha_bcva_masked(
    sample: &BcvaSample,
    alpha: f64,
    s3: f64,
    mask: LegMask,
) -> Result<PsiWitness> {
    check_inputs(alpha, s3)?;
    Ok(psi_unchecked(sample, alpha, s3, mask))
}

#[derive(Clone, Copy)]
struct Best {
    x: f64,
    idx: usize,
}

impl Best {
    const NONE: Best = Best {
        x: f64::NEG_INFINITY,
        idx: 0,
    };
    #[inline]
    fn offer(&mut self, x: f64, idx: usize) {
        if x > self.x {
            *self = Best { x, idx };
        }
    }
}

pub(crate) fn psi_unchecked(sample: &BcvaSample, alpha: f64, s3: f64, mask: LegMask) -> PsiWitness {
    let x = sample.x();
    let n = x.len();
    let (tc, tf) = (sample.tau_c(), sample.tau_f());
    let pen = alpha * s3;
    let gc = |v: f64| {
        if mask.counterparty {
            g_counterparty(v, alpha)
        } else {
            (0.0, 0.0)
        }
    };
    let gf = |v: f64| {
        if mask.firm {
            g_firm(v, alpha)
        } else {
            (0.0, 0.0)
        }
    };

    let mut best: Option<PsiWitness> = None;
    let mut offer = |w: PsiWitness| {
        if best.is_none_or(|b| w.value > b.value) {
            best = Some(w);
        }
    };

    // unperturbed default dates (cases 1a/3a and 1b/2b)
    if tc != 0 {
        let free = tf == 0 || tf > tc;
        let (v, s) = gc(x[tc - 1]);
        let k = if free { 0 } else { 1 };
        offer(PsiWitness {
            value: v - pen * k as f64,
            case: if free { CaseLabel::C1a } else { CaseLabel::C3a },
            k,
            tau_c: tc,
            tau_f: if free { tf } else { 0 },
            tau1: tc,
            shift: s,
        });
    }
    if tf != 0 {
        let free = tc == 0 || tc > tf;
        let (v, s) = gf(x[tf - 1]);
        let k = if free { 0 } else { 1 };
        offer(PsiWitness {
            value: v - pen * k as f64,
            case: if free { CaseLabel::C1b } else { CaseLabel::C2b },
            k,
            tau_c: if free { tc } else { 0 },
            tau_f: tf,
            tau1: tf,
            shift: s,
        });
    }
    // no default at all
    let k0 = (tc != 0) as u8 + (tf != 0) as u8;
    offer(PsiWitness {
        value: -pen * k0 as f64,
        case: match (tc != 0, tf != 0) {
            (false, false) => CaseLabel::C1c,
            (true, false) => CaseLabel::C2c,
            (false, true) => CaseLabel::C3c,
            (true, true) => CaseLabel::C4c,
        },
        k: k0,
        tau_c: 0,
        tau_f: 0,
        tau1: 0,
        shift: 0.0,
    });

    // moved default dates: best exposure per admissible group
    let (mut ca, mut cb, mut fa, mut fb) = (Best::NONE, Best::NONE, Best::NONE, Best::NONE);
    for a in 1..=n {
        let v = x[a - 1];
        if a != tc {
            if tf == 0 || a < tf {
                ca.offer(v, a);
            } else {
                cb.offer(v, a);
            }
        }
        if a != tf {
            if tc == 0 || a < tc {
                fa.offer(v, a);
            } else {
                fb.offer(v, a);
            }
        }
    }
    let kc = 1 + (tc != 0) as u8;
    let kf = 1 + (tf != 0) as u8;
    if ca.idx != 0 {
        let (v, s) = gc(ca.x);
        offer(PsiWitness {
            value: v - pen * kc as f64,
            case: CaseLabel::C2a,
            k: kc,
            tau_c: ca.idx,
            tau_f: tf,
            tau1: ca.idx,
            shift: s,
        });
    }
    if cb.idx != 0 {
        let (v, s) = gc(cb.x);
        offer(PsiWitness {
            value: v - pen * (kc + 1) as f64,
            case: CaseLabel::C4a,
            k: kc + 1,
            tau_c: cb.idx,
            tau_f: 0,
            tau1: cb.idx,
            shift: s,
        });
    }
    if fa.idx != 0 {
        let (v, s) = gf(fa.x);
        offer(PsiWitness {
            value: v - pen * kf as f64,
            case: CaseLabel::C3b,
            k: kf,
            tau_c: tc,
            tau_f: fa.idx,
            tau1: fa.idx,
            shift: s,
        });
    }
    if fb.idx != 0 {
        let (v, s) = gf(fb.x);
        offer(PsiWitness {
            value: v - pen * (kf + 1) as f64,
            case: CaseLabel::C4b,
            k: kf + 1,
            tau_c: 0,
            tau_f: fb.idx,
            tau1: fb.idx,
            shift: s,
        });
    }
    best.expect("the no-default candidate always exists")
}

fn payoff_masked(s: &BcvaSample, mask: LegMask) -> f64 {
    let mut p = 0.0;
    if mask.counterparty {
        p += s.counterparty_payoff();
    }
    if mask.firm {
        p += s.firm_payoff();
    }
    p
}

fn mean_psi(d: &EmpiricalDistribution<BcvaSample>, alpha: f64, s3: f64, mask: LegMask) -> f64 {
    let vals: Vec<f64> = d
        .samples()
        .par_iter()
        .map(|s| psi_unchecked(s, alpha, s3, mask).value)
        .collect();
    ordered_sum(&vals) / vals.len() as f64
}

/// `F(α) = αδ + (1/N) Σ Ψ_α`.
pub fn dual_objective_bcva(
    d: &EmpiricalDistribution<BcvaSample>,
    alpha: f64,
    delta: f64,
    s3: f64,
) -> Result<f64> {
    check_inputs(alpha, s3)?;
    Ok(alpha * delta + mean_psi(d, alpha, s3, LegMask::BOTH))
}

/// Which reduction a solution was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BcvaLeg {
    Bilateral,
    /// Unilateral CVA: firm exposures and defaults cleared.
    CounterpartyOnly,
    /// Unilateral DVA: counterparty leg cleared and masked.
    FirmOnly,
}

impl BcvaLeg {
    fn mask(self) -> LegMask {
        match self {
            BcvaLeg::FirmOnly => LegMask::FIRM_ONLY,
            _ => LegMask::BOTH,
        }
    }

    /// Distribution actually optimized over.
    pub fn transform(
        self,
        d: &EmpiricalDistribution<BcvaSample>,
    ) -> EmpiricalDistribution<BcvaSample> {
        match self {
            BcvaLeg::Bilateral => d.clone(),
            BcvaLeg::CounterpartyOnly => d.map(BcvaSample::counterparty_leg),
            BcvaLeg::FirmOnly => d.map(BcvaSample::firm_leg),
        }
    }

    fn sign(self) -> f64 {
        if self == BcvaLeg::FirmOnly {
            -1.0
        } else {
            1.0
        }
    }
}

/// Bilateral solution plus the reduction it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcvaSolution {
    pub leg: BcvaLeg,
    pub dual: DualSolution<PsiWitness>,
}

impl std::ops::Deref for BcvaSolution {
    type Target = DualSolution<PsiWitness>;
    fn deref(&self) -> &Self::Target {
        &self.dual
    }
}

fn solve(
    d: &EmpiricalDistribution<BcvaSample>,
    delta: f64,
    s3: f64,
    leg: BcvaLeg,
    cfg: &SolverConfig,
) -> Result<BcvaSolution> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "radius must be >= 0, got {delta}"
        )));
    }
    check_inputs(1.0, s3)?;
    let data = leg.transform(d);
    let mask = leg.mask();
    let baseline = data.mean_of(|s| payoff_masked(s, mask));
    let witnesses_at = |a: f64| -> Vec<PsiWitness> {
        data.samples()
            .par_iter()
            .map(|s| psi_unchecked(s, a, s3, mask))
            .collect()
    };
    if delta == 0.0 {
        // exact α → ∞ limit: every adversarial move is priced out
        let alpha = cfg.alpha_max;
        let witnesses = witnesses_at(alpha);
        let mean = ordered_sum(&witnesses.iter().map(|w| w.value).collect::<Vec<_>>())
            / witnesses.len() as f64;
        return Ok(BcvaSolution {
            leg,
            dual: DualSolution {
                alpha,
                value: leg.sign() * baseline,
                dual_value: baseline,
                delta,
                s3,
                baseline,
                mean_psi: mean,
                boundary: Some(Boundary::Upper),
                trace: vec![(alpha, mean)],
                witnesses,
                kink_fallback: false,
            },
        });
    }
    let mut f = |a: f64| a * delta + mean_psi(&data, a, s3, mask);
    let m = minimize_convex(&mut f, cfg);
    let witnesses = witnesses_at(m.alpha);
    let mean = ordered_sum(&witnesses.iter().map(|w| w.value).collect::<Vec<_>>())
        / witnesses.len() as f64;
    Ok(BcvaSolution {
        leg,
        dual: DualSolution {
            alpha: m.alpha,
            value: leg.sign() * m.value,
            dual_value: m.value,
            delta,
            s3,
            baseline,
            mean_psi: mean,
            boundary: m.boundary,
            trace: m.trace,
            witnesses,
            kink_fallback: false,
        },
    })
}

/// Minimizes `F` over `α ∈ [1e−8, 1e8]`.
pub fn minimize_dual_bcva(
    d: &EmpiricalDistribution<BcvaSample>,
    delta: f64,
    s3: f64,
) -> Result<BcvaSolution> {
    solve(d, delta, s3, BcvaLeg::Bilateral, &SolverConfig::default())
}

pub fn minimize_dual_bcva_with(
    d: &EmpiricalDistribution<BcvaSample>,
    delta: f64,
    s3: f64,
    leg: BcvaLeg,
    cfg: &SolverConfig,
) -> Result<BcvaSolution> {
    solve(d, delta, s3, leg, cfg)
}

pub fn robust_unilateral_cva(
    d: &EmpiricalDistribution<BcvaSample>,
    delta: f64,
    s3: f64,
) -> Result<BcvaSolution> {
    solve(
        d,
        delta,
        s3,
        BcvaLeg::CounterpartyOnly,
        &SolverConfig::default(),
    )
}

/// Reported value is `−sup E[⟨X⁻, Y_F⟩]`, the smallest DVA in the ball.
pub fn robust_unilateral_dva(
    d: &EmpiricalDistribution<BcvaSample>,
    delta: f64,
    s3: f64,
) -> Result<BcvaSolution> {
    solve(d, delta, s3, BcvaLeg::FirmOnly, &SolverConfig::default())
}

#[derive(Clone, Copy)]
struct Move {
    tau_c: usize,
    tau_f: usize,
    tau1: usize,
    shift: f64,
}

/// Every single-sample move worth considering at `α`: the original, the
/// no-default state, and each counterparty-first and firm-first date with the
/// cheapest compatible other index, unshifted and with the `α`-optimal shift.
fn candidates(s: &BcvaSample, alpha: f64, s3: f64, mask: LegMask) -> Vec<Candidate<Move>> {
    let x = s.x();
    let n = x.len();
    let (tc, tf) = (s.tau_c(), s.tau_f());
    let mut out = Vec::with_capacity(2 * n + 2);
    let payoff = |m: &Move| -> f64 {
        let mut xv = x[m.tau1.max(1) - 1];
        if m.tau1 > 0 {
            xv += m.shift;
        }
        let mut p = 0.0;
        if m.tau1 == 0 {
            return 0.0;
        }
        if mask.counterparty && m.tau_c == m.tau1 && (m.tau_f == 0 || m.tau_c < m.tau_f) {
            p += xv.max(0.0);
        }
        if mask.firm && m.tau_f == m.tau1 && (m.tau_c == 0 || m.tau_f < m.tau_c) {
            p += xv.min(0.0);
        }
        p
    };
    let mut push = |m: Move| {
        let k = indicator_distance(m.tau_c, tc) + indicator_distance(m.tau_f, tf);
        out.push(Candidate {
            cost: m.shift * m.shift + s3 * k,
            payoff: payoff(&m),
            desc: m,
        });
    };
    let first = if tc != 0 && (tf == 0 || tc < tf) {
        tc
    } else if tf != 0 {
        tf
    } else {
        0
    };
    push(Move {
        tau_c: tc,
        tau_f: tf,
        tau1: first,
        shift: 0.0,
    });
    push(Move {
        tau_c: 0,
        tau_f: 0,
        tau1: 0,
        shift: 0.0,
    });
    let w = 0.5 / alpha;
    for a in 1..=n {
        let v = x[a - 1];
        let b = if tf == 0 || tf > a { tf } else { 0 };
        push(Move {
            tau_c: a,
            tau_f: b,
            tau1: a,
            shift: 0.0,
        });
        if mask.counterparty {
            push(Move {
                tau_c: a,
                tau_f: b,
                tau1: a,
                shift: w,
            });
        }
        let c = if tc == 0 || tc > a { tc } else { 0 };
        push(Move {
            tau_c: c,
            tau_f: a,
            tau1: a,
            shift: 0.0,
        });
        if mask.firm && v < 0.0 {
            push(Move {
                tau_c: c,
                tau_f: a,
                tau1: a,
                shift: (-v).min(w),
            });
        }
    }
    out
}

/// Worst-case distribution at `α*` from the per-sample candidate moves.
pub fn recover_worst_case_bcva(
    sol: &BcvaSolution,
    d: &EmpiricalDistribution<BcvaSample>,
) -> Result<WorstCaseDistribution<BcvaSample>> {
    let data = sol.leg.transform(d);
    if sol.delta == 0.0 {
        return Ok(WorstCaseDistribution::empirical(data.samples()));
    }
    if sol.boundary.is_some() {
        return Err(Error::BoundarySolution);
    }
    let mask = sol.leg.mask();
    let samples = data.samples();
    let cands_at = |a: f64| -> Vec<_> {
        samples
            .par_iter()
            .map(|s| candidates(s, a, sol.s3, mask))
            .collect()
    };
    Ok(fill_at_budget(
        sol.alpha,
        sol.delta,
        cands_at,
        |i, m: &Move| {
            let mut x = samples[i].x().to_vec();
            if m.tau1 > 0 {
                x[m.tau1 - 1] += m.shift;
            }
            BcvaSample::new(x, m.tau_c, m.tau_f).expect("moves keep sample invariants")
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &[f64], c: usize, f: usize) -> BcvaSample {
        BcvaSample::new(x.to_vec(), c, f).unwrap()
    }

    #[test]
    fn unperturbed_counterparty_default() {
        let w = psi_alpha_bcva(&s(&[0.5, 0.0], 1, 0), 1.0, 10.0).unwrap();
        assert!((w.value - 0.75).abs() < 1e-15);
        assert_eq!(w.case, CaseLabel::C1a);
        assert_eq!(w.k, 0);
    }

    #[test]
    fn creating_a_default_is_not_free() {
        let w = psi_alpha_bcva(&s(&[0.0, 0.0], 0, 0), 1.0, 1.0).unwrap();
        assert_eq!(w.value, 0.0);
        assert_eq!(w.case, CaseLabel::C1c);
    }

    #[test]
    fn large_alpha_recovers_payoff() {
        let smp = s(&[0.3, -1.2, 2.0], 3, 2);
        let w = psi_alpha_bcva(&smp, 1e6, 1.0).unwrap();
        assert!((w.value - smp.payoff()).abs() < 1e-5);
    }

    #[test]
    fn rejects_non_positive_alpha() {
        assert!(matches!(
            psi_alpha_bcva(&s(&[1.0], 1, 0), 0.0, 1.0),
            Err(Error::NonPositiveAlpha(_))
        ));
    }

    #[test]
    fn witness_value_matches_its_point() {
        let smp = s(&[0.3, -1.2, 2.0, 0.1], 4, 2);
        for &alpha in &[0.01, 0.3, 1.0, 7.0] {
            let w = psi_alpha_bcva(&smp, alpha, 0.7).unwrap();
            let p = w.perturbed(&smp);
            let direct = p.payoff() - alpha * crate::empirical::cost_bcva(&p, &smp, 0.7).unwrap();
            assert!(
                (direct - w.value).abs() < 1e-12,
                "alpha {alpha}: {direct} vs {}",
                w.value
            );
            assert!(
                (w.transport_cost(0.7) - crate::empirical::cost_bcva(&p, &smp, 0.7).unwrap()).abs()
                    < 1e-12
            );
        }
    }
}
