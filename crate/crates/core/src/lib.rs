//! Exact diagonalization and analytic tools for the extended Dicke model.

pub mod analytic;
pub mod circuit;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod observe;
pub mod params;
pub mod solve;

pub use error::{Error, Result};
pub use hilbert::{Axis, HilbertSpace, SparseOperator};
pub use model::EdmSpec;
pub use params::{ModelParams, Units};
pub use solve::SpectrumResult;
