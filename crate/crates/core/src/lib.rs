pub mod acquisition;
pub mod benchmarks;
pub mod embedding;
pub mod error;
pub mod gp;
pub mod linalg;
pub mod lp;
pub mod optim;
pub mod popt;
pub mod runner;
pub mod sobol;

pub use error::{Error, Result};
