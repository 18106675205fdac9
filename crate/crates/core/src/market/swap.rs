use serde::{Deserialize, Serialize};

use super::grid::DateGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    ReceiveFixed,
    PayFixed,
}

impl Direction {
    /// +1 for receive-fixed, -1 for pay-fixed.
    pub fn sign(self) -> f64 {
        match self {
            Direction::ReceiveFixed => 1.0,
            Direction::PayFixed => -1.0,
        }
    }
}

/// Spot-starting vanilla fixed-float swap; both legs share the payment frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapSpec {
    pub notional: f64,
    pub maturity: f64,
    pub direction: Direction,
    pub coupon: f64,
    pub per_year: u32,
}

impl SwapSpec {
    pub fn validate(&self, grid: &DateGrid) -> Result<()> {
        if !(self.notional > 0.0) || !self.notional.is_finite() {
            return Err(Error::InvalidInput(format!(
                "notional must be > 0, got {}",
                self.notional
            )));
        }
        if !self.coupon.is_finite() {
            return Err(Error::InvalidInput("coupon is not finite".into()));
        }
        if self.per_year == 0 || !(self.maturity > 0.0) {
            return Err(Error::InvalidInput(
                "swap needs a positive maturity and frequency".into(),
            ));
        }
        if self.maturity > grid.horizon() + 1e-9 {
            return Err(Error::MaturityBeyondGrid {
                maturity: self.maturity,
                grid_end: grid.horizon(),
            });
        }
        Ok(())
    }

    /// Grid indices of the payment dates `T_1 < ... < T_m`, with `T_0 = 0`.
    pub fn payment_indices(&self, grid: &DateGrid) -> Result<Vec<usize>> {
        self.validate(grid)?;
        let m = (self.maturity * self.per_year as f64).round() as usize;
        if ((m as f64) / self.per_year as f64 - self.maturity).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "maturity {} is not a whole number of periods",
                self.maturity
            )));
        }
        (1..=m)
            .map(|j| {
                let t = j as f64 / self.per_year as f64;
                grid.index_of(t).ok_or_else(|| {
                    Error::InvalidInput(format!("swap payment date {t}y is not a grid date"))
                })
            })
            .collect()
    }
}
