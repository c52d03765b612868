//! Heat kernels, Faber–Krahn constants and Kato-class checks on Lipschitz
//! Riemannian manifolds, discretised by P1 finite elements.
//!
//! The Dirichlet form is `E(f) = ½ ∫ |df|² dvol`; the heat semigroup is
//! `e^{tΔ/2}`. Eigenvalues follow the Rayleigh quotient `∫|df|² / ∫f²`
//! without the ½.

pub mod error;
pub mod expr;
pub mod femcore;
pub mod geometry;
pub mod heat;
pub mod kato;
pub mod linalg;
pub mod par;
pub mod spectral;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
