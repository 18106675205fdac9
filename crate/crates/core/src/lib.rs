pub mod calibration;
pub mod dual;
pub mod empirical;
pub mod error;
pub mod io;
pub mod market;
pub mod metrics;
mod numeric;
pub mod oracle;
pub mod robust_bcva;
pub mod robust_fva;
pub mod scenario;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/samples.md")]
    mod samples {}
    #[doc = include_str!("../../../book/src/dual.md")]
    mod dual {}
    #[doc = include_str!("../../../book/src/radius.md")]
    mod radius {}
    #[doc = include_str!("../../../book/src/market.md")]
    mod market {}
}
