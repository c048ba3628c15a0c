//! Sufficient dimension reduction for metric-space responses.

pub mod dataio;
pub mod error;
pub mod evalmetrics;
pub mod kwire;
pub mod ladle;
pub mod linalg;
pub mod metrics;
pub mod simgen;
pub mod stream;
pub mod wire;

pub use error::{Error, Result};
