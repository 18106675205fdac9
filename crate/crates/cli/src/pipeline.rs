use std::path::Path;

use robust_xva::calibration::{
    mean_exposures_bcva, mean_exposures_fva, s3_from_profiles, wasserstein_radius_bounds,
    MatchingConfig, RadiusBounds,
};
use robust_xva::dual::{Boundary, SolverConfig, WorstCaseDistribution};
use robust_xva::empirical::{
    baseline_bcva, baseline_fba, baseline_fca, baseline_fva, baseline_unilateral_cva,
    baseline_unilateral_dva, cost_bcva, cost_fva, BcvaSample, EmpiricalDistribution, FvaSample,
};
use robust_xva::io::{read_portfolio, read_term_structure, read_vol_surface};
use robust_xva::market::{
    bootstrap_discount_curve, bootstrap_hazard_curve, calibrate_hull_white, sample_default_pairs,
    simulate_funding_spreads, simulate_short_rates, CdsConventions, DateGrid, DiscountCurve,
    FundingCurve, HazardCurve, HullWhite, HwCalibration, SwapConventions, SwapSpec,
};
use robust_xva::metrics::{exposure_profiles, ExposureProfiles};
use robust_xva::robust_bcva::{minimize_dual_bcva_with, recover_worst_case_bcva, BcvaLeg};
use robust_xva::robust_fva::{minimize_dual_fva_with, recover_worst_case_fva, FvaLeg};
use robust_xva::scenario::{
    build_bcva_samples, build_fva_samples, funding_cube, price_portfolio, ExposureCube,
    RecoveryConfig,
};
use serde::Serialize;

use crate::config::{Config, CreditCurve, Mode};
use crate::RunError;

/// Tenor of the CDS quote a flat spread stands for.
const FLAT_CDS_TENOR: f64 = 5.0;

pub struct Market {
    pub curve: DiscountCurve,
    pub model: HullWhite,
    pub hw: HwCalibration,
    pub counterparty: HazardCurve,
    pub firm: HazardCurve,
    pub funding: Option<FundingCurve>,
}

fn hazard(
    dir: &Path,
    c: &CreditCurve,
    recovery: f64,
    curve: &DiscountCurve,
) -> Result<HazardCurve, RunError> {
    let quotes = match c {
        CreditCurve::Flat { flat_spread } => vec![(FLAT_CDS_TENOR, *flat_spread)],
        CreditCurve::File { curve: f } => read_term_structure(&dir.join(f), "spread")?,
    };
    Ok(bootstrap_hazard_curve(
        &quotes,
        recovery,
        curve,
        CdsConventions::default(),
    )?)
}

pub fn load_market(cfg: &Config, dir: &Path) -> Result<Market, RunError> {
    let swaps = read_term_structure(&dir.join("swap_rates.csv"), "rate")?;
    let curve = bootstrap_discount_curve(
        &swaps,
        SwapConventions {
            fixed_per_year: cfg.rates.fixed_per_year,
        },
    )?;
    let surface = read_vol_surface(&dir.join("swaption_vols.csv"))?;
    let hw = calibrate_hull_white(
        &surface,
        &curve,
        cfg.rates.mean_reversion,
        cfg.rates.fixed_per_year,
    )?;
    let model = HullWhite::new(hw.params.clone(), curve.clone());
    let counterparty = hazard(
        dir,
        &cfg.credit.counterparty,
        cfg.credit.recovery_counterparty,
        &curve,
    )?;
    let firm = hazard(dir, &cfg.credit.firm, cfg.credit.recovery_firm, &curve)?;
    let funding = match (&cfg.funding, cfg.mode.is_funding()) {
        (Some(f), true) => {
            let spreads = read_term_structure(&dir.join("funding_spreads.csv"), &f.column)?;
            Some(FundingCurve::with_vol_endpoints(
                &spreads,
                f.vol_start,
                f.vol_end,
                f.vol_horizon,
            )?)
        }
        _ => None,
    };
    Ok(Market {
        curve,
        model,
        hw,
        counterparty,
        firm,
        funding,
    })
}

pub enum Samples {
    Bcva(EmpiricalDistribution<BcvaSample>),
    Fva(EmpiricalDistribution<FvaSample>),
}

pub struct SampleSet {
    /// Discounted portfolio values in reporting units.
    pub cube: ExposureCube,
    pub funding_cube: Option<ExposureCube>,
    pub samples: Samples,
}

pub fn simulate(
    cfg: &Config,
    market: &Market,
    portfolio: &[SwapSpec],
    grid: &DateGrid,
    seed: u64,
) -> Result<SampleSet, RunError> {
    let paths = simulate_short_rates(&market.model, grid, cfg.n_paths, seed)?;
    let cube = price_portfolio(&paths, &market.model, portfolio, grid)?.scaled(cfg.notional_unit);
    let (tc, tf) =
        sample_default_pairs(&market.counterparty, &market.firm, grid, cfg.n_paths, seed);
    if let Some(fc) = &market.funding {
        let f = simulate_funding_spreads(fc, grid, cfg.n_paths, seed);
        let samples = build_fva_samples(&cube, &tc, &tf, &f)?;
        let fcube = funding_cube(&cube, &f)?;
        Ok(SampleSet {
            cube,
            funding_cube: Some(fcube),
            samples: Samples::Fva(EmpiricalDistribution::new(samples)?),
        })
    } else {
        let rec = RecoveryConfig::new(cfg.credit.recovery_counterparty, cfg.credit.recovery_firm)?;
        let samples = build_bcva_samples(&cube, &tc, &tf, rec)?;
        Ok(SampleSet {
            cube,
            funding_cube: None,
            samples: Samples::Bcva(EmpiricalDistribution::new(samples)?),
        })
    }
}

fn bcva_leg(mode: Mode) -> BcvaLeg {
    match mode {
        Mode::Ucva => BcvaLeg::CounterpartyOnly,
        Mode::Udva => BcvaLeg::FirmOnly,
        _ => BcvaLeg::Bilateral,
    }
}

fn fva_leg(mode: Mode) -> FvaLeg {
    match mode {
        Mode::Fca => FvaLeg::Cost,
        Mode::Fba => FvaLeg::Benefit,
        _ => FvaLeg::Full,
    }
}

fn leg_s3(pos: &[f64], neg: &[f64], mode: Mode, cfg: &Config) -> Result<f64, RunError> {
    let m = cfg.calibration.s3_mode.into();
    Ok(match mode {
        Mode::Ucva | Mode::Fca => s3_from_profiles(pos, pos, m)?,
        Mode::Udva | Mode::Fba => s3_from_profiles(neg, neg, m)?,
        _ => s3_from_profiles(pos, neg, m)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Baselines {
    /// CVA and FCA.
    pub cost: f64,
    /// DVA (positive number) and FBA.
    pub benefit: f64,
    /// BCVA and FVA.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustPoint {
    pub percentage: f64,
    pub delta: f64,
    pub value: f64,
    pub alpha: f64,
    pub boundary: Option<Boundary>,
}

pub enum WorstCase {
    Bcva(WorstCaseDistribution<BcvaSample>),
    Fva(WorstCaseDistribution<FvaSample>),
}

pub struct RunResult {
    pub config: Config,
    pub grid: DateGrid,
    pub hw: HwCalibration,
    pub s3: f64,
    pub s3_overridden: bool,
    pub bounds: RadiusBounds,
    pub baselines: Baselines,
    /// Baseline of the mode's leg, on the leg's own data; equals the robust
    /// value at δ = 0.
    pub baseline: f64,
    pub robust: Vec<RobustPoint>,
    pub profiles: ExposureProfiles,
    pub funding_profiles: Option<ExposureProfiles>,
    /// At the largest radius, when the dual minimizer is interior.
    pub worst_case: Option<WorstCase>,
    pub worst_case_delta: f64,
}

impl RunResult {
    pub fn robust_at(&self, percentage: f64) -> Option<&RobustPoint> {
        self.robust.iter().find(|p| p.percentage == percentage)
    }
}

pub fn run(cfg: &Config) -> Result<RunResult, RunError> {
    let grid = DateGrid::regular(cfg.horizon_years, cfg.grid_per_year)?;
    let portfolio = read_portfolio(&cfg.data.portfolio, None)?;
    for s in &portfolio {
        s.validate(&grid)
            .map_err(|e| RunError::Config(format!("`horizon_years`: {e}")))?;
        if !cfg.grid_per_year.is_multiple_of(s.per_year) {
            return Err(RunError::Config(format!(
                "`grid_per_year` = {} does not contain the swap payment frequency {}",
                cfg.grid_per_year, s.per_year
            )));
        }
    }
    let market = load_market(cfg, &cfg.data.market)?;
    let second = match &cfg.data.second_market {
        Some(dir) => Some(load_market(cfg, dir)?),
        None => None,
    };
    let set_a = simulate(cfg, &market, &portfolio, &grid, cfg.seed)?;
    let set_b = simulate(
        cfg,
        second.as_ref().unwrap_or(&market),
        &portfolio,
        &grid,
        cfg.second_seed(),
    )?;
    let mcfg = MatchingConfig {
        max_size: cfg.calibration.max_matching,
        seed: cfg.seed,
    };
    let solver = SolverConfig::default();
    let mode = cfg.mode;

    let (s3, bounds, baselines, baseline, robust, worst_case, wc_delta) =
        match (&set_a.samples, &set_b.samples) {
            (Samples::Bcva(a), Samples::Bcva(b)) => {
                let (pos, neg) = mean_exposures_bcva(a);
                let s3 = match cfg.calibration.s3_override {
                    Some(v) => v,
                    None => leg_s3(&pos, &neg, mode, cfg)?,
                };
                let leg = bcva_leg(mode);
                let (la, lb) = (leg.transform(a), leg.transform(b));
                let bounds = wasserstein_radius_bounds(
                    la.samples(),
                    lb.samples(),
                    |p, q| cost_bcva(p, q, s3),
                    mcfg,
                )?;
                let baselines = Baselines {
                    cost: baseline_unilateral_cva(a),
                    benefit: baseline_unilateral_dva(a),
                    total: baseline_bcva(a),
                };
                let baseline = match leg {
                    BcvaLeg::Bilateral => baseline_bcva(&la),
                    BcvaLeg::CounterpartyOnly => baseline_unilateral_cva(&la),
                    BcvaLeg::FirmOnly => baseline_unilateral_dva(&la),
                };
                let mut robust = Vec::new();
                let mut last = None;
                for &(pct, delta) in &bounds.grid(&cfg.delta_percentages) {
                    let sol = minimize_dual_bcva_with(a, delta, s3, leg, &solver)?;
                    robust.push(RobustPoint {
                        percentage: pct,
                        delta,
                        value: sol.value,
                        alpha: sol.alpha,
                        boundary: sol.boundary,
                    });
                    if last.as_ref().is_none_or(|(d, _)| delta >= *d) {
                        last = Some((delta, sol));
                    }
                }
                let (wc_delta, sol) = last.expect("percentages are non-empty");
                let wc = recover_worst_case_bcva(&sol, a).ok().map(WorstCase::Bcva);
                (s3, bounds, baselines, baseline, robust, wc, wc_delta)
            }
            (Samples::Fva(a), Samples::Fva(b)) => {
                let (pos, neg) = mean_exposures_fva(a);
                let s3 = match cfg.calibration.s3_override {
                    Some(v) => v,
                    None => leg_s3(&pos, &neg, mode, cfg)?,
                };
                let leg = fva_leg(mode);
                let (la, lb) = (leg.transform(a), leg.transform(b));
                let bounds = wasserstein_radius_bounds(
                    la.samples(),
                    lb.samples(),
                    |p, q| cost_fva(p, q, s3),
                    mcfg,
                )?;
                let baselines = Baselines {
                    cost: baseline_fca(a),
                    benefit: baseline_fba(a),
                    total: baseline_fva(a),
                };
                let baseline = match leg {
                    FvaLeg::Full => baseline_fva(&la),
                    FvaLeg::Cost => baseline_fca(&la),
                    FvaLeg::Benefit => baseline_fba(&la),
                };
                let mut robust = Vec::new();
                let mut last = None;
                for &(pct, delta) in &bounds.grid(&cfg.delta_percentages) {
                    let sol = minimize_dual_fva_with(a, delta, s3, leg, &solver)?;
                    robust.push(RobustPoint {
                        percentage: pct,
                        delta,
                        value: sol.value,
                        alpha: sol.alpha,
                        boundary: sol.boundary,
                    });
                    if last.as_ref().is_none_or(|(d, _)| delta >= *d) {
                        last = Some((delta, sol));
                    }
                }
                let (wc_delta, sol) = last.expect("percentages are non-empty");
                let wc = recover_worst_case_fva(&sol, a).ok().map(WorstCase::Fva);
                (s3, bounds, baselines, baseline, robust, wc, wc_delta)
            }
            _ => unreachable!("both sets come from the same mode"),
        };

    let profiles = exposure_profiles(&set_a.cube, grid.times(), cfg.pfe_quantile)?;
    let funding_profiles = match &set_a.funding_cube {
        Some(c) => Some(exposure_profiles(c, grid.times(), cfg.pfe_quantile)?),
        None => None,
    };
    Ok(RunResult {
        config: cfg.clone(),
        grid,
        hw: market.hw,
        s3,
        s3_overridden: cfg.calibration.s3_override.is_some(),
        bounds,
        baselines,
        baseline,
        robust,
        profiles,
        funding_profiles,
        worst_case,
        worst_case_delta: wc_delta,
    })
}
