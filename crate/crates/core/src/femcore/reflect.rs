use nalgebra::DMatrix;

use super::mesh::{BoundaryFacet, FacetKind, Mesh};
use crate::error::{Error, Result};
use crate::geometry::MetricField;

/// A mesh doubled across the boundary plane `{x_d = 0}`.
#[derive(Debug, Clone)]
pub struct Reflection {
    pub mesh: Mesh,
    /// `O ∪ ρ(O)` as vertices of the doubled mesh.
    pub omega: Vec<usize>,
    /// Original vertex of every vertex of the doubled mesh.
    pub fold: Vec<usize>,
    /// Mirror image of every original vertex (fixed on the plane).
    pub mirror: Vec<usize>,
    /// `false` when `O` stays away from the boundary and nothing was mirrored.
    pub reflected: bool,
}

impl Reflection {
    /// Even extension `f ∘ fold` of a vertex function on the original mesh.
    pub fn even_extension(&self, f: &[f64]) -> Vec<f64> {
        self.fold.iter().map(|&v| f[v]).collect()
    }

    /// `O ∪ ρ(O)` for another vertex set `O` of the original mesh.
    pub fn double(&self, domain: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = domain.iter().flat_map(|&v| [v, self.mirror[v]]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Mirrors a half-space mesh across `{x_d = 0}`; the mirrored metric is
/// `S g(Sz) S` with `S` flipping the last coordinate.
pub fn reflect_domain(mesh: &Mesh, domain: &[usize]) -> Result<Reflection> {
    let d = mesh.dim();
    let n = mesh.n_vertices();
    let on_plane = |v: usize| mesh.vertex(v)[d - 1] == 0.0;
    let has_boundary = mesh.facets().iter().any(|f| f.kind == FacetKind::ManifoldBoundary);
    if domain.iter().any(|&v| v >= n) {
        return Err(Error::InvalidArgument("domain vertex out of range".into()));
    }
    if !has_boundary || !domain.iter().any(|&v| on_plane(v)) {
        let mut omega = domain.to_vec();
        omega.sort_unstable();
        omega.dedup();
        return Ok(Reflection { mesh: mesh.clone(), omega, fold: (0..n).collect(), mirror: (0..n).collect(), reflected: false });
    }
    if (0..n).any(|v| mesh.vertex(v)[d - 1] < 0.0) {
        return Err(Error::InvalidArgument("reflection needs a mesh inside {x_d >= 0}".into()));
    }

    let mut image = vec![0usize; n];
    let mut coords = mesh.coords().to_vec();
    let mut fold: Vec<usize> = (0..n).collect();
    for v in 0..n {
        if on_plane(v) {
            image[v] = v;
        } else {
            image[v] = fold.len();
            fold.push(v);
            let p = mesh.vertex(v);
            coords.extend(p[..d - 1].iter().copied());
            coords.push(-p[d - 1]);
        }
    }
    let mut cells = mesh.cells().to_vec();
    cells.extend(mesh.cells().iter().map(|&v| image[v]));
    let nc = mesh.n_cells();
    let mut facets: Vec<BoundaryFacet> = Vec::new();
    for f in mesh.facets().iter().filter(|f| f.kind != FacetKind::ManifoldBoundary) {
        facets.push(f.clone());
    }
    for f in mesh.facets().iter().filter(|f| f.kind != FacetKind::ManifoldBoundary) {
        facets.push(BoundaryFacet {
            vertices: f.vertices.iter().map(|&v| image[v]).collect(),
            cell: f.cell + nc,
            axis: f.axis,
            upper: if f.axis == d - 1 { !f.upper } else { f.upper },
            kind: f.kind,
        });
    }

    let original = mesh.metric_field().clone();
    let mut s = DMatrix::identity(d, d);
    s[(d - 1, d - 1)] = -1.0;
    let metric = MetricField::new(d, move |z| {
        if z[d - 1] < 0.0 {
            let mut zz = z.to_vec();
            zz[d - 1] = -zz[d - 1];
            &s * original.eval(&zz) * &s
        } else {
            original.eval(z)
        }
    });
    let doubled = Mesh::from_parts(d, mesh.h(), coords, cells, facets, metric)?;

    let mut omega: Vec<usize> = domain.iter().flat_map(|&v| [v, image[v]]).collect();
    omega.sort_unstable();
    omega.dedup();
    Ok(Reflection { mesh: doubled, omega, fold, mirror: image, reflected: true })
}
