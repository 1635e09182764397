pub mod besov;
pub mod cone;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod lattice;
pub mod nilgroup;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
