//! Coulomb-analogy diagnostics for quantum phase transitions in linear
//! Hamiltonian families H(λ) = H₀ + λV.

// Link the system OpenBLAS even when only raw LAPACK symbols are referenced.
extern crate openblas_src;

pub mod ep;
pub mod error;
pub mod line_charge;
pub mod linalg;
pub mod model;
pub mod scaling;
pub mod spectral;

pub use error::{Error, Result};
