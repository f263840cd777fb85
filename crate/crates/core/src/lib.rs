pub mod co_optimizer;
pub mod dmet;
pub mod error;
pub mod geometry;
pub mod fermion_ops;
pub mod integrals;
pub mod linalg;
pub mod scf;
pub mod simulator;
pub mod vqe_engine;

pub use error::{Error, Result};
