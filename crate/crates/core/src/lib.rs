pub mod error;
pub mod experiment_harness;
pub mod fbm_kernel;
pub mod quadrature;
pub mod reference_oracles;
pub mod sde_engine;
pub mod stochastic_grid;
pub mod sve_engine;

pub use error::{Error, Result};
