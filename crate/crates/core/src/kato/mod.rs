//! Kato-class measures, Schrödinger semigroups and Feynman–Kac sampling.

mod form;
mod gradient;
mod integral;
mod measure;
mod montecarlo;

pub use form::{form_bound, schroedinger_evolve};
pub use gradient::{
    cell_gradient_norms, gradient_estimate_check, gradient_tolerance, vertex_average, GradientReport,
    GRADIENT_TOL_SLOPE,
};
pub use integral::{
    admissible_exponent, kato_criterion_check, kato_integral, kato_profile, riesz_criterion, surface_kato,
    CriterionReport, CriterionRow, RieszProfile,
};
pub use measure::{facet_measure, facet_midpoint, KatoMeasure, MeasureConfig, MeasureKind};
pub use montecarlo::{feynman_kac_mc, FkConfig, JumpChain, McEstimate};
