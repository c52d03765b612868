//! Heat semigroup of `Δ/2`, heat kernels and the checks built on them.

mod bounds;
mod diagnostics;
mod evolve;
mod kernel;
mod mean_value;

pub use bounds::{
    conservativeness_check, control_pair, even_times, gaussian_bound_check, holdout_check, p_integrable,
    verify_decoupled_bound, ControlPair, DecoupledReport, EnvelopeRow, GaussianReport, HoldoutReport,
    GAUSSIAN_NOISE_FLOOR,
};
pub use diagnostics::{ball_volume, doubling_constant, sobolev_exponent, sobolev_ratio, DoublingReport, SobolevReport};
pub use evolve::{evolve, evolve_with, heat_generator, HeatScheme, Stepper};
pub use kernel::{dyadic_times, geometric_times, heat_kernel, lumped_mass, spread_sources, HeatKernelGrid, KernelSet};
pub use mean_value::{mean_value_check, MeanValueSample};
