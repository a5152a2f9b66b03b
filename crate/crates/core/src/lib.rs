pub mod bol;
pub mod eigen;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod meanfield;
pub mod quadrature;
pub mod radial;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
