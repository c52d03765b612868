//! First Dirichlet eigenvalues, Faber–Krahn sweeps and the Euclidean radius.

mod bessel;
mod eigen;
mod faber_krahn;
mod radius;

pub use bessel::{bessel_j0, bessel_j0_first_root, faber_krahn_constant};
pub use eigen::{lambda1, EigenResult, RESIDUAL_TOL};
pub use faber_krahn::{
    domain_dofs, domain_quotient, faber_krahn_sweep, frozen_fk_constant, largest_component, DomainSample,
    FkReport, FkSweepConfig,
};
pub use radius::{euclidean_radius, radius_field, RadiusContext, RadiusField, RadiusLimit};
