//! Meshes, P1 assembly of the Dirichlet form, Dirichlet restriction and the
//! boundary reflection.

mod assemble;
mod export;
mod mesh;
mod reflect;

pub use assemble::{assemble, dirichlet_restrict, far_field_cutoff, DiscreteOperator};
pub use export::{export_mesh, fmt_f64};
pub use mesh::{build_mesh, BoundaryFacet, EdgeGraph, FacetKind, Mesh};
pub use reflect::{reflect_domain, Reflection};
