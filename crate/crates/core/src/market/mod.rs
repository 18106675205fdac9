//! Curves, the short-rate model and path simulation.

pub mod curve;
pub mod funding;
pub mod grid;
pub mod hazard;
pub mod hull_white;
pub mod rng;
pub mod swap;

pub use curve::{bootstrap_discount_curve, DiscountCurve, SwapConventions};
pub use funding::{simulate_funding_spreads, FundingCurve, FundingPaths};
pub use grid::DateGrid;
pub use hazard::{
    bootstrap_hazard_curve, sample_default_pairs, sample_default_times, CdsConventions, HazardCurve,
};
pub use hull_white::{
    calibrate_hull_white, simulate_short_rates, HullWhite, HwCalibration, HwParams, HwPaths,
    VolSurface,
};
pub use swap::{Direction, SwapSpec};
