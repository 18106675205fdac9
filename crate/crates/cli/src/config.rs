use std::path::{Path, PathBuf};

use robust_xva::calibration::S3Mode;
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bcva,
    Ucva,
    Udva,
    Fva,
    Fca,
    Fba,
}

impl Mode {
    pub fn is_funding(self) -> bool {
        matches!(self, Mode::Fva | Mode::Fca | Mode::Fba)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Bcva => "bcva",
            Mode::Ucva => "ucva",
            Mode::Udva => "udva",
            Mode::Fva => "fva",
            Mode::Fca => "fca",
            Mode::Fba => "fba",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum S3ModeName {
    #[default]
    PairwiseMax,
    MeanDeviation,
}

impl From<S3ModeName> for S3Mode {
    fn from(m: S3ModeName) -> Self {
        match m {
            S3ModeName::PairwiseMax => S3Mode::PairwiseMax,
            S3ModeName::MeanDeviation => S3Mode::MeanDeviation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    /// Directory holding `swap_rates.csv`, `swaption_vols.csv` and
    /// `funding_spreads.csv`.
    pub market: PathBuf,
    /// Second snapshot for radius calibration. Without it the second sample
    /// set is drawn from `market` with `calibration.second_seed`.
    pub second_market: Option<PathBuf>,
    pub portfolio: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub mean_reversion: f64,
    /// Fixed-leg frequency of the quoted par swaps.
    #[serde(default = "one")]
    pub fixed_per_year: u32,
}

fn one() -> u32 {
    1
}

/// A flat CDS spread or a term structure file (`tenor_years,spread`) inside
/// the market directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum CreditCurve {
    Flat { flat_spread: f64 },
    File { curve: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Credit {
    pub recovery_counterparty: f64,
    pub recovery_firm: f64,
    pub counterparty: CreditCurve,
    pub firm: CreditCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Funding {
    /// Column of `funding_spreads.csv`.
    pub column: String,
    pub vol_start: f64,
    pub vol_end: f64,
    pub vol_horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    #[serde(default)]
    pub s3_mode: S3ModeName,
    pub s3_override: Option<f64>,
    #[serde(default = "default_max_matching")]
    pub max_matching: usize,
    pub second_seed: Option<u64>,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            s3_mode: S3ModeName::default(),
            s3_override: None,
            max_matching: default_max_matching(),
            second_seed: None,
        }
    }
}

fn default_max_matching() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub mode: Mode,
    pub seed: u64,
    pub n_paths: usize,
    pub grid_per_year: u32,
    pub horizon_years: f64,
    /// Multiplier applied to portfolio values (e.g. 1 for millions).
    #[serde(default = "unit")]
    pub notional_unit: f64,
    #[serde(default = "default_quantile")]
    pub pfe_quantile: f64,
    /// Radii as percentages of `δ_u`.
    pub delta_percentages: Vec<f64>,
    pub data: DataPaths,
    pub rates: Rates,
    pub credit: Credit,
    pub funding: Option<Funding>,
    #[serde(default)]
    pub calibration: Calibration,
}

fn unit() -> f64 {
    1.0
}

fn default_quantile() -> f64 {
    0.95
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: Config = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file and resolves relative data paths against its directory.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let base = std::fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
        cfg.resolve(&base);
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.market);
        fix(&mut self.data.portfolio);
        if let Some(p) = self.data.second_market.as_mut() {
            fix(p);
        }
    }

    pub fn second_seed(&self) -> u64 {
        self.calibration
            .second_seed
            .unwrap_or(self.seed.wrapping_add(1))
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.n_paths == 0 {
            return Err(config_err("`n_paths` must be >= 1"));
        }
        if self.grid_per_year == 0 {
            return Err(config_err("`grid_per_year` must be >= 1"));
        }
        if !(self.horizon_years > 0.0) {
            return Err(config_err("`horizon_years` must be > 0"));
        }
        if !(self.notional_unit > 0.0) || !self.notional_unit.is_finite() {
            return Err(config_err("`notional_unit` must be > 0"));
        }
        if !(self.pfe_quantile > 0.0 && self.pfe_quantile < 1.0) {
            return Err(config_err("`pfe_quantile` must lie in (0, 1)"));
        }
        if self.delta_percentages.is_empty() {
            return Err(config_err("`delta_percentages` is empty"));
        }
        if self
            .delta_percentages
            .iter()
            .any(|p| !(*p >= 0.0) || !p.is_finite())
        {
            return Err(config_err("`delta_percentages` must be finite and >= 0"));
        }
        if !(self.rates.mean_reversion > 0.0) {
            return Err(config_err("`rates.mean_reversion` must be > 0"));
        }
        if self.rates.fixed_per_year == 0 {
            return Err(config_err("`rates.fixed_per_year` must be >= 1"));
        }
        for (name, r) in [
            (
                "credit.recovery_counterparty",
                self.credit.recovery_counterparty,
            ),
            ("credit.recovery_firm", self.credit.recovery_firm),
        ] {
            if !(0.0..1.0).contains(&r) {
                return Err(config_err(format!("`{name}` must lie in [0, 1)")));
            }
        }
        for (name, c) in [
            ("credit.counterparty", &self.credit.counterparty),
            ("credit.firm", &self.credit.firm),
        ] {
            if let CreditCurve::Flat { flat_spread } = c {
                if !(*flat_spread >= 0.0) || !flat_spread.is_finite() {
                    return Err(config_err(format!("`{name}.flat_spread` must be >= 0")));
                }
            }
        }
        if self.mode.is_funding() {
            let f = self
                .funding
                .as_ref()
                .ok_or_else(|| config_err("funding modes need a `[funding]` section"))?;
            if !(f.vol_start > 0.0 && f.vol_end > 0.0 && f.vol_horizon > 0.0) {
                return Err(config_err("`funding` vols and horizon must be > 0"));
            }
        }
        if let Some(s3) = self.calibration.s3_override {
            if !(s3 > 0.0) || !s3.is_finite() {
                return Err(config_err("`calibration.s3_override` must be > 0"));
            }
        }
        if self.calibration.max_matching == 0 {
            return Err(config_err("`calibration.max_matching` must be >= 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
mode = "bcva"
seed = 7
n_paths = 10
grid_per_year = 4
horizon_years = 5
delta_percentages = [0, 50, 100]

[data]
market = "m"
portfolio = "p.csv"

[rates]
mean_reversion = 0.03

[credit]
recovery_counterparty = 0.4
recovery_firm = 0.4
counterparty = { flat_spread = 0.015 }
firm = { curve = "firm.csv" }
"#;

    #[test]
    fn parses_and_defaults() {
        let c = Config::from_toml(BASE).unwrap();
        assert_eq!(c.mode, Mode::Bcva);
        assert_eq!(c.rates.fixed_per_year, 1);
        assert_eq!(c.pfe_quantile, 0.95);
        assert_eq!(c.second_seed(), 8);
        assert!(matches!(c.credit.firm, CreditCurve::File { .. }));
    }

    #[test]
    fn named_diagnostics() {
        let bad = BASE.replace("n_paths = 10", "n_paths = 0");
        let e = Config::from_toml(&bad).unwrap_err().to_string();
        assert!(e.contains("n_paths"), "{e}");
        let bad = BASE.replace("mode = \"bcva\"", "mode = \"fva\"");
        assert!(Config::from_toml(&bad)
            .unwrap_err()
            .to_string()
            .contains("funding"));
        let bad = BASE.replace("seed = 7", "seed = 7\ncolour = 1");
        assert!(Config::from_toml(&bad)
            .unwrap_err()
            .to_string()
            .contains("colour"));
    }
}
