pub mod calibration;
pub mod error;
pub mod levy_core;
pub mod model;
pub mod montecarlo;
pub mod pricing;
pub mod quad;
pub mod reference;
pub mod stats;

pub use error::{Category, Error, Result};

/// Engine version recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
