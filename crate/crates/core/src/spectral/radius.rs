use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::femcore::{FacetKind, Mesh};
use crate::geometry::{eigen_range, spd_sqrt};
use crate::par;

const BISECTION_RTOL: f64 = 1e-3;

/// What stopped the radius from growing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusLimit {
    /// The ball reached the artificial cutoff.
    Compactness,
    /// A cell in the ball left the band `[1/b, b]` after rescaling.
    Ellipticity,
    /// Neither; the radius is infinite.
    Unbounded,
}

/// Shared data for evaluating `r_E(·, b)` on a mesh.
#[derive(Debug, Clone)]
pub struct RadiusContext<'a> {
    mesh: &'a Mesh,
    b: f64,
    cutoff_distance: Vec<f64>,
    uniformly_elliptic: bool,
}

impl<'a> RadiusContext<'a> {
    pub fn new(mesh: &'a Mesh, b: f64) -> Result<Self> {
        if !(b > 1.0) {
            return Err(Error::InvalidArgument(format!("b must exceed 1, got {b}")));
        }
        let cutoff = mesh.facet_vertices(FacetKind::ArtificialCutoff);
        let cutoff_distance = if cutoff.is_empty() {
            vec![f64::INFINITY; mesh.n_vertices()]
        } else {
            mesh.distances_from(&cutoff, None)
        };
        // eigenvalues of A⁻¹gA⁻¹ lie in [min λ / max λ, max λ / min λ] for every A = g(x)^{1/2}
        let ranges = par::map_indexed(mesh.n_cells(), |c| eigen_range(&mesh.cell_metric_matrix(c)));
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (a, z) in ranges.into_iter().flatten() {
            lo = lo.min(a);
            hi = hi.max(z);
        }
        let mut vertex_lo = f64::INFINITY;
        let mut vertex_hi: f64 = 0.0;
        for v in 0..mesh.n_vertices() {
            if let Some((a, z)) = eigen_range(&mesh.metric_field().eval(mesh.vertex(v))) {
                vertex_lo = vertex_lo.min(a);
                vertex_hi = vertex_hi.max(z);
            }
        }
        let uniformly_elliptic = hi / vertex_lo <= b && vertex_hi / lo <= b;
        Ok(Self { mesh, b, cutoff_distance, uniformly_elliptic })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Graph distance from `v` to the artificial cutoff.
    pub fn compactness_radius(&self, v: usize) -> f64 {
        self.cutoff_distance[v]
    }

    /// `r_E(x, b)` and the binding constraint.
    pub fn euclidean_radius(&self, x: usize) -> (f64, RadiusLimit) {
        let r_comp = self.cutoff_distance[x];
        let r_ell = if self.uniformly_elliptic { f64::INFINITY } else { self.ellipticity_radius(x, r_comp) };
        if r_comp.is_infinite() && r_ell.is_infinite() {
            return (f64::INFINITY, RadiusLimit::Unbounded);
        }
        let limit = if r_ell < r_comp { RadiusLimit::Ellipticity } else { RadiusLimit::Compactness };
        let cap = r_comp.min(r_ell);
        // P(r) := r < r_comp and r ≤ r_ell; bisect on (0, 2·cap]
        let holds = |r: f64| r < r_comp && r <= r_ell;
        let (mut lo, mut hi) = (0.0, 2.0 * cap);
        while hi - lo > BISECTION_RTOL * 0.5 * (hi + lo) {
            let mid = 0.5 * (lo + hi);
            if holds(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi), limit)
    }

    /// Distance from `x` to the barycenter of the nearest cell whose rescaled
    /// metric leaves `[1/b, b]`, reaching the barycenter through one of the
    /// cell's vertices.
    fn ellipticity_radius(&self, x: usize, search: f64) -> f64 {
        let mesh = self.mesh;
        let a = spd_sqrt(&mesh.metric_field().eval(mesh.vertex(x)));
        let Some(ai) = a.try_inverse() else { return 0.0 };
        let dist = mesh.distances_from(&[x], if search.is_finite() { Some(search) } else { None });
        let mut best = f64::INFINITY;
        let mut order: Vec<usize> = (0..mesh.n_vertices()).filter(|&v| dist[v].is_finite()).collect();
        order.sort_by(|&u, &v| dist[u].total_cmp(&dist[v]).then(u.cmp(&v)));
        let mut checked = vec![false; mesh.n_cells()];
        for v in order {
            if dist[v] >= best {
                break;
            }
            for &c in mesh.vertex_cells(v) {
                if checked[c] {
                    continue;
                }
                checked[c] = true;
                if !self.cell_ok(&ai, c) {
                    best = best.min(self.barycenter_distance(c, &dist));
                }
            }
        }
        best
    }

    fn barycenter_distance(&self, c: usize, dist: &[f64]) -> f64 {
        let mesh = self.mesh;
        let bc = mesh.barycenter(c);
        let g = mesh.cell_metric_matrix(c);
        mesh.cell(c)
            .iter()
            .map(|&w| {
                let v = nalgebra::DVector::from_iterator(bc.len(), bc.iter().zip(mesh.vertex(w)).map(|(a, b)| a - b));
                dist[w] + (v.transpose() * &g * &v)[(0, 0)].max(0.0).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn cell_ok(&self, ai: &DMatrix<f64>, c: usize) -> bool {
        let g = self.mesh.cell_metric_matrix(c);
        match eigen_range(&(ai * g * ai)) {
            Some((lo, hi)) => lo >= 1.0 / self.b && hi <= self.b,
            None => false,
        }
    }
}

/// `r_E(x, b)` for a single vertex.
pub fn euclidean_radius(mesh: &Mesh, x: usize, b: f64) -> Result<(f64, RadiusLimit)> {
    Ok(RadiusContext::new(mesh, b)?.euclidean_radius(x))
}

/// Sampled `r_E` and `R = min(r_E, ε₁)/ε₂` on the vertices off the cutoff.
#[derive(Debug, Clone)]
pub struct RadiusField {
    pub b: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub vertices: Vec<usize>,
    pub r_e: Vec<f64>,
    pub r: Vec<f64>,
    pub limit: Vec<RadiusLimit>,
}

impl RadiusField {
    /// `R` at a mesh vertex, if sampled.
    pub fn r_at(&self, vertex: usize) -> Option<f64> {
        self.vertices.binary_search(&vertex).ok().map(|k| self.r[k])
    }
}

pub fn radius_field(mesh: &Mesh, b: f64, eps1: f64, eps2: f64) -> Result<RadiusField> {
    if !(eps1 > 0.0 && eps2 > 1.0) {
        return Err(Error::InvalidArgument(format!("need eps1 > 0 and eps2 > 1, got {eps1}, {eps2}")));
    }
    let ctx = RadiusContext::new(mesh, b)?;
    let mut cut = vec![false; mesh.n_vertices()];
    for v in mesh.facet_vertices(FacetKind::ArtificialCutoff) {
        cut[v] = true;
    }
    let vertices: Vec<usize> = (0..mesh.n_vertices()).filter(|&v| !cut[v]).collect();
    let values = par::map_slice(&vertices, |&v| ctx.euclidean_radius(v));
    let mut r_e = Vec::with_capacity(values.len());
    let mut limit = Vec::with_capacity(values.len());
    for (v, (re, l)) in vertices.iter().zip(values) {
        assert!(re > 0.0, "Euclidean radius must be positive (vertex {v})");
        r_e.push(re);
        limit.push(l);
    }
    let r = r_e.iter().map(|&x| x.min(eps1) / eps2).collect();
    Ok(RadiusField { b, eps1, eps2, vertices, r_e, r, limit })
}
