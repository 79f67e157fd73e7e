//! Supremum Lagrange-multiplier testing of an IMA(1,1) null against a
//! threshold TARMA(1,1) alternative, with exact simulation, null
//! distribution tables, wild bootstrap, local-power diffusion limits,
//! TARMA estimation, and Monte Carlo benchmarking.

pub mod bench;
pub mod bootstrap;
pub mod error;
pub mod functional;
pub mod ima;
pub mod local_power;
pub mod null_dist;
pub mod rng;
pub mod series;
pub mod sim;
pub mod suplm;
pub mod tarma_fit;
pub mod util;

pub use error::{Result, TarmaError};
pub use series::TimeSeries;
