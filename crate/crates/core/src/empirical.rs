//! Samples, transport costs and the baseline (non-robust) adjustments.
//!
//! Indicator vectors are stored as indices. A default indicator `τ ∈ {0..n}`
//! stands for `e_τ` (the zero vector when `τ = 0`); a survival indicator `l`
//! stands for `l` leading ones followed by zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense form of a default indicator.
pub fn default_indicator(tau: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    if tau > 0 {
        v[tau - 1] = 1.0;
    }
    v
}

/// Dense form of a survival indicator with `l` leading ones.
pub fn survival_indicator(l: usize, n: usize) -> Vec<f64> {
    (0..n).map(|k| if k < l { 1.0 } else { 0.0 }).collect()
}

/// `‖e_a − e_b‖²` for default indicators.
pub fn indicator_distance(a: usize, b: usize) -> f64 {
    if a == b {
        0.0
    } else {
        (a != 0) as u8 as f64 + (b != 0) as u8 as f64
    }
}

/// One path of the bilateral problem: exposure `x` with `x⁺ = (1−R_C)V⁺` and
/// `x⁻ = (1−R_F)V⁻`, and default indices for counterparty and firm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcvaSample {
    x: Vec<f64>,
    tau_c: usize,
    tau_f: usize,
}

impl BcvaSample {
    pub fn new(x: Vec<f64>, tau_c: usize, tau_f: usize) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::Empty("exposure vector"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "exposure vector has non-finite entries".into(),
            ));
        }
        if tau_c > n || tau_f > n {
            return Err(Error::InvalidInput(format!(
                "default index beyond the grid (n = {n}, got {tau_c} and {tau_f})"
            )));
        }
        if tau_c != 0 && tau_c == tau_f {
            return Err(Error::InvalidInput(format!(
                "counterparty and firm default on the same date {tau_c}"
            )));
        }
        Ok(Self { x, tau_c, tau_f })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn tau_c(&self) -> usize {
        self.tau_c
    }

    pub fn tau_f(&self) -> usize {
        self.tau_f
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Exposure at a 1-based date index.
    pub fn at(&self, k: usize) -> f64 {
        self.x[k - 1]
    }

    /// `⟨x⁺, y^c⟩` when the counterparty defaults first, else 0.
    pub fn counterparty_payoff(&self) -> f64 {
        counterparty_first_payoff(&self.x, self.tau_c, self.tau_f)
    }

    /// `⟨x⁻, y^f⟩` when the firm defaults first, else 0 (always ≤ 0).
    pub fn firm_payoff(&self) -> f64 {
        firm_first_payoff(&self.x, self.tau_c, self.tau_f)
    }

    pub fn payoff(&self) -> f64 {
        self.counterparty_payoff() + self.firm_payoff()
    }

    /// Counterparty leg only: `x⁺` and `τ_F` cleared.
    pub fn counterparty_leg(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| v.max(0.0)).collect(),
            tau_c: self.tau_c,
            tau_f: 0,
        }
    }

    /// Firm leg only: `x⁻` and `τ_C` cleared.
    pub fn firm_leg(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| v.min(0.0)).collect(),
            tau_c: 0,
            tau_f: self.tau_f,
        }
    }
}

pub(crate) fn counterparty_first_payoff(x: &[f64], a: usize, b: usize) -> f64 {
    if a != 0 && (b == 0 || a < b) {
        x[a - 1].max(0.0)
    } else {
        0.0
    }
}

pub(crate) fn firm_first_payoff(x: &[f64], a: usize, b: usize) -> f64 {
    if b != 0 && (a == 0 || b < a) {
        x[b - 1].min(0.0)
    } else {
        0.0
    }
}

/// One path of the funding problem: funding exposure `z` and the joint survival
/// block length `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FvaSample {
    z: Vec<f64>,
    l: usize,
}

impl FvaSample {
    pub fn new(z: Vec<f64>, l: usize) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::Empty("funding exposure vector"));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "funding exposure has non-finite entries".into(),
            ));
        }
        if l > z.len() {
            return Err(Error::InvalidInput(format!(
                "survival block {l} longer than the grid ({})",
                z.len()
            )));
        }
        Ok(Self { z, l })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn block(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// `⟨z, y^{cf}⟩`.
    pub fn payoff(&self) -> f64 {
        self.z[..self.l].iter().sum()
    }

    pub fn positive_part(&self) -> Self {
        Self {
            z: self.z.iter().map(|v| v.max(0.0)).collect(),
            l: self.l,
        }
    }

    pub fn negative_part(&self) -> Self {
        Self {
            z: self.z.iter().map(|v| v.min(0.0)).collect(),
            l: self.l,
        }
    }
}

/// Common surface of the two sample kinds.
pub trait Sample: Clone + Send + Sync {
    fn dim(&self) -> usize;
    fn payoff(&self) -> f64;
}

impl Sample for BcvaSample {
    fn dim(&self) -> usize {
        self.n()
    }
    fn payoff(&self) -> f64 {
        BcvaSample::payoff(self)
    }
}

impl Sample for FvaSample {
    fn dim(&self) -> usize {
        self.n()
    }
    fn payoff(&self) -> f64 {
        FvaSample::payoff(self)
    }
}

/// Uniformly weighted samples `Φ_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution<S> {
    samples: Vec<S>,
}

impl<S: Sample> EmpiricalDistribution<S> {
    pub fn new(samples: Vec<S>) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("sample set"))?;
        let n = first.dim();
        if let Some(bad) = samples.iter().find(|s| s.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.dim(),
            });
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Grid length `n` shared by all samples.
    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn mean_payoff(&self) -> f64 {
        self.mean_of(|s| s.payoff())
    }

    pub(crate) fn mean_of(&self, f: impl Fn(&S) -> f64) -> f64 {
        self.samples.iter().map(f).sum::<f64>() / self.samples.len() as f64
    }

    pub fn map<T: Sample>(&self, f: impl Fn(&S) -> T) -> EmpiricalDistribution<T> {
        EmpiricalDistribution {
            samples: self.samples.iter().map(f).collect(),
        }
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a,
            got: b,
        })
    }
}

fn squared_distance(u: &[f64], x: &[f64]) -> f64 {
    u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `c_{S₃}` for bilateral samples: `‖u−x‖² + S₃‖v₁−y₁‖² + S₃‖v₂−y₂‖²`.
pub fn cost_bcva(a: &BcvaSample, b: &BcvaSample, s3: f64) -> Result<f64> {
    check_dims(a.n(), b.n())?;
    Ok(squared_distance(&a.x, &b.x)
        + s3 * (indicator_distance(a.tau_c, b.tau_c) + indicator_distance(a.tau_f, b.tau_f)))
}

/// `c_{S₃}` for funding samples: `‖u−z‖² + S₃|l − l'|`.
pub fn cost_fva(a: &FvaSample, b: &FvaSample, s3: f64) -> Result<f64> {
    check_dims(a.n(), b.n())?;
    Ok(squared_distance(&a.z, &b.z) + s3 * a.l.abs_diff(b.l) as f64)
}

pub fn baseline_bcva(d: &EmpiricalDistribution<BcvaSample>) -> f64 {
    d.mean_payoff()
}

pub fn baseline_unilateral_cva(d: &EmpiricalDistribution<BcvaSample>) -> f64 {
    d.mean_of(BcvaSample::counterparty_payoff)
}

/// Reported with a positive sign: `−(1/N) Σ ⟨x⁻, y^f⟩`.
pub fn baseline_unilateral_dva(d: &EmpiricalDistribution<BcvaSample>) -> f64 {
    -d.mean_of(BcvaSample::firm_payoff)
}

pub fn baseline_fva(d: &EmpiricalDistribution<FvaSample>) -> f64 {
    d.mean_payoff()
}

pub fn baseline_fca(d: &EmpiricalDistribution<FvaSample>) -> f64 {
    d.mean_of(|s| s.positive_part().payoff())
}

pub fn baseline_fba(d: &EmpiricalDistribution<FvaSample>) -> f64 {
    d.mean_of(|s| s.negative_part().payoff())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(x: &[f64], c: usize, f: usize) -> BcvaSample {
        BcvaSample::new(x.to_vec(), c, f).unwrap()
    }

    #[test]
    fn bcva_costs() {
        let a = bs(&[1.0, 2.0], 1, 0);
        assert_eq!(cost_bcva(&a, &a, 3.0).unwrap(), 0.0);
        assert_eq!(cost_bcva(&bs(&[1.0, 2.0], 2, 0), &a, 3.0).unwrap(), 6.0);
        assert_eq!(cost_bcva(&bs(&[2.0, 2.0], 1, 0), &a, 3.0).unwrap(), 1.0);
        assert!(cost_bcva(&a, &bs(&[1.0], 0, 0), 1.0).is_err());
    }

    #[test]
    fn fva_costs() {
        let a = FvaSample::new(vec![0.0, 0.0, 0.0], 3).unwrap();
        let b = FvaSample::new(vec![0.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(cost_fva(&a, &b, 1.5).unwrap(), 3.0);
        let c = FvaSample::new(vec![0.0, 2.0], 1).unwrap();
        let d = FvaSample::new(vec![0.0, 0.0], 1).unwrap();
        assert_eq!(cost_fva(&c, &d, 7.0).unwrap(), 4.0);
    }

    #[test]
    fn bcva_baselines() {
        let one = EmpiricalDistribution::new(vec![bs(&[1.0, -0.5], 1, 0)]).unwrap();
        assert_eq!(baseline_bcva(&one), 1.0);
        let none = EmpiricalDistribution::new(vec![bs(&[1.0, -0.5], 0, 0)]).unwrap();
        assert_eq!(baseline_bcva(&none), 0.0);
        let two = EmpiricalDistribution::new(vec![bs(&[1.0, -0.5], 1, 0), bs(&[1.0, -0.5], 0, 0)])
            .unwrap();
        assert_eq!(baseline_bcva(&two), 0.5);
    }

    #[test]
    fn dva_sign_convention() {
        let d = EmpiricalDistribution::new(vec![bs(&[-2.0], 0, 1), bs(&[3.0], 0, 0)]).unwrap();
        assert_eq!(baseline_unilateral_dva(&d), 1.0);
        let pos = EmpiricalDistribution::new(vec![bs(&[2.0, 1.0], 1, 0)]).unwrap();
        assert_eq!(baseline_unilateral_dva(&pos), 0.0);
        let firm_only = EmpiricalDistribution::new(vec![bs(&[2.0, -1.0], 0, 2)]).unwrap();
        assert_eq!(baseline_unilateral_cva(&firm_only), 0.0);
    }

    #[test]
    fn fva_baselines() {
        let d =
            EmpiricalDistribution::new(vec![FvaSample::new(vec![0.1, -0.2], 2).unwrap()]).unwrap();
        assert!((baseline_fva(&d) + 0.1).abs() < 1e-15);
        let e =
            EmpiricalDistribution::new(vec![FvaSample::new(vec![0.1, -0.2], 0).unwrap()]).unwrap();
        assert_eq!(baseline_fva(&e), 0.0);
    }

    #[test]
    fn first_to_default_ordering() {
        let s = bs(&[1.0, -1.0, 2.0], 3, 2);
        assert_eq!(s.counterparty_payoff(), 0.0);
        assert_eq!(s.firm_payoff(), -1.0);
        assert!(BcvaSample::new(vec![1.0], 1, 1).is_err());
    }

    fn bcva_sample(n: usize) -> impl Strategy<Value = BcvaSample> {
        (prop::collection::vec(-5.0f64..5.0, n), 0..=n, 0..=n)
            .prop_filter("no tie", |(_, c, f)| *c == 0 || c != f)
            .prop_map(|(x, c, f)| BcvaSample::new(x, c, f).unwrap())
    }

    proptest! {
        #[test]
        fn cost_bcva_is_a_symmetric_discrepancy(a in bcva_sample(4), b in bcva_sample(4), s3 in 0.01f64..10.0) {
            let ab = cost_bcva(&a, &b, s3).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, cost_bcva(&b, &a, s3).unwrap());
            prop_assert_eq!(ab == 0.0, a == b);
        }

        #[test]
        fn bcva_splits_into_legs(samples in prop::collection::vec(bcva_sample(3), 1..6)) {
            let d = EmpiricalDistribution::new(samples).unwrap();
            let diff = baseline_bcva(&d) - (baseline_unilateral_cva(&d) - baseline_unilateral_dva(&d));
            prop_assert!(diff.abs() < 1e-12);
        }

        #[test]
        fn fca_plus_fba_is_fva(zs in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 4), 0usize..=4), 1..6)) {
            let d = EmpiricalDistribution::new(
                zs.into_iter().map(|(z, l)| FvaSample::new(z, l).unwrap()).collect()).unwrap();
            prop_assert!((baseline_fca(&d) + baseline_fba(&d) - baseline_fva(&d)).abs() < 1e-12);
        }

        #[test]
        fn cost_fva_is_a_symmetric_discrepancy(
            z1 in prop::collection::vec(-2.0f64..2.0, 3), l1 in 0usize..=3,
            z2 in prop::collection::vec(-2.0f64..2.0, 3), l2 in 0usize..=3, s3 in 0.01f64..10.0) {
            let a = FvaSample::new(z1, l1).unwrap();
            let b = FvaSample::new(z2, l2).unwrap();
            let ab = cost_fva(&a, &b, s3).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, cost_fva(&b, &a, s3).unwrap());
            prop_assert_eq!(ab == 0.0, a == b);
        }
    }
}
