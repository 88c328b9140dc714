//! Nonlinear interference estimation for ultra-wideband WDM links with
//! inter-channel stimulated Raman scattering and variably loaded spans.

pub mod error;
mod gauss;
pub mod gn_engine;
pub mod raman;
pub mod scenario;
pub mod ssfm;
pub mod units;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
