//! Numerical tools for rough-symbol dispersive evolution: sampled fields,
//! the FBI phase-space transform, symbol classes, Hamilton flows, discrete
//! Weyl propagation, estimate scans, time partitions and water-wave symbols.

pub mod error;
pub mod estimates;
pub mod fbi;
pub mod fields;
pub mod hamflow;
pub mod partition;
pub mod propagate;
pub mod symbols;
pub mod waterwave;

pub use error::{Error, Result};
