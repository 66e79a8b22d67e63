pub mod betabin;
pub mod chain;
pub mod diagnostics;
pub mod error;
pub mod fixtures;
pub mod multi;
pub mod stats;
pub mod uni;

pub use chain::{ChainOutput, EmConfig, EmTrace, GibbsConfig, Scheme, StopRule};
pub use error::{DtaError, Result};
