pub mod arith;
pub mod error;
pub mod fourier;
pub mod gap;
pub mod hyperplane;
pub mod lattice;
pub mod linalg;
pub mod numeric;
pub mod singularity;

pub use error::{Error, Result};
