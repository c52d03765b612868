use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::femcore::{DiscreteOperator, FacetKind, Mesh};
use crate::heat::lumped_mass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    VolumeDensity,
    SurfaceDensity,
}

/// The `[measure]` table of a measure file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub kind: MeasureKind,
    /// Density as an expression in `x, y, z` (or `x0, x1, …`) and `r`.
    #[serde(default)]
    pub expr: Option<String>,
    /// Density per vertex (volume) or per boundary facet (surface).
    #[serde(default)]
    pub table: Option<Vec<f64>>,
    /// Bound for the `L^∞` part `k₂` of the split.
    #[serde(default)]
    pub split_linf: Option<f64>,
    /// Local integrability exponent of the density.
    #[serde(default)]
    pub exponent: Option<f64>,
}

/// A signed measure given by a density against `vol` (one value per
/// vertex) or against the boundary surface measure (one value per facet).
#[derive(Debug, Clone, PartialEq)]
pub struct KatoMeasure {
    pub kind: MeasureKind,
    pub values: Vec<f64>,
    pub split_linf: Option<f64>,
    /// `k ∈ L^p` for this `p`; `None` for bounded densities.
    pub exponent: Option<f64>,
}

/// `σ(F) = √det(Eᵀ g E) / (d-1)!` for the facet edges `E`, `g` the metric of
/// the adjacent cell. Points count 1 in `d = 1`.
pub fn facet_measure(mesh: &Mesh, facet: usize) -> f64 {
    let f = &mesh.facets()[facet];
    let d = mesh.dim();
    if d == 1 {
        return 1.0;
    }
    let p0 = mesh.vertex(f.vertices[0]);
    let e = DMatrix::from_fn(d, d - 1, |i, j| mesh.vertex(f.vertices[j + 1])[i] - p0[i]);
    let g = mesh.cell_metric_matrix(f.cell);
    let gram = e.transpose() * g * &e;
    let fact: f64 = (1..d).map(|k| k as f64).product();
    gram.determinant().max(0.0).sqrt() / fact
}

/// Barycenter of a facet.
pub fn facet_midpoint(mesh: &Mesh, facet: usize) -> Vec<f64> {
    let f = &mesh.facets()[facet];
    let d = mesh.dim();
    let mut c = vec![0.0; d];
    for &v in &f.vertices {
        for (ci, x) in c.iter_mut().zip(mesh.vertex(v)) {
            *ci += x / f.vertices.len() as f64;
        }
    }
    c
}

impl KatoMeasure {
    pub fn zero(kind: MeasureKind, mesh: &Mesh) -> Self {
        let n = match kind {
            MeasureKind::VolumeDensity => mesh.n_vertices(),
            MeasureKind::SurfaceDensity => mesh.facets().len(),
        };
        Self { kind, values: vec![0.0; n], split_linf: None, exponent: None }
    }

    /// Volume density sampled at the vertices.
    pub fn volume(mesh: &Mesh, k: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..mesh.n_vertices()).map(|v| k(mesh.vertex(v))).collect();
        Self { kind: MeasureKind::VolumeDensity, values, split_linf: None, exponent: None }
    }

    pub fn volume_values(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::InvalidArgument(format!(
                "volume density needs {} values, got {}",
                mesh.n_vertices(),
                values.len()
            )));
        }
        Ok(Self { kind: MeasureKind::VolumeDensity, values, split_linf: None, exponent: None })
    }

    /// Surface density sampled at the midpoints of the manifold-boundary
    /// facets; cutoff facets carry nothing.
    pub fn surface(mesh: &Mesh, l: impl Fn(&[f64]) -> f64) -> Result<Self> {
        if !mesh.facets().iter().any(|f| f.kind == FacetKind::ManifoldBoundary) {
            return Err(Error::NoBoundary);
        }
        let values = mesh
            .facets()
            .iter()
            .enumerate()
            .map(|(i, f)| if f.kind == FacetKind::ManifoldBoundary { l(&facet_midpoint(mesh, i)) } else { 0.0 })
            .collect();
        Ok(Self { kind: MeasureKind::SurfaceDensity, values, split_linf: None, exponent: None })
    }

    pub fn surface_values(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if !mesh.facets().iter().any(|f| f.kind == FacetKind::ManifoldBoundary) {
            return Err(Error::NoBoundary);
        }
        if values.len() != mesh.facets().len() {
            return Err(Error::InvalidArgument(format!(
                "surface density needs {} values, got {}",
                mesh.facets().len(),
                values.len()
            )));
        }
        for (i, (f, &l)) in mesh.facets().iter().zip(&values).enumerate() {
            if f.kind == FacetKind::ArtificialCutoff && l != 0.0 {
                return Err(Error::CutoffFacet { facet: i });
            }
        }
        Ok(Self { kind: MeasureKind::SurfaceDensity, values, split_linf: None, exponent: None })
    }

    pub fn from_config(cfg: &MeasureConfig, mesh: &Mesh) -> Result<Self> {
        let m = match (&cfg.expr, &cfg.table) {
            (Some(e), None) => {
                let f = ScalarExpr::parse(e)?;
                let pts: Vec<Vec<f64>> = match cfg.kind {
                    MeasureKind::VolumeDensity => (0..mesh.n_vertices()).map(|v| mesh.vertex(v).to_vec()).collect(),
                    MeasureKind::SurfaceDensity => (0..mesh.facets().len()).map(|i| facet_midpoint(mesh, i)).collect(),
                };
                let vals = pts.iter().map(|p| f.eval(p)).collect::<Result<Vec<_>>>()?;
                match cfg.kind {
                    MeasureKind::VolumeDensity => Self::volume_values(mesh, vals)?,
                    MeasureKind::SurfaceDensity => {
                        let vals = mesh
                            .facets()
                            .iter()
                            .zip(vals)
                            .map(|(f, l)| if f.kind == FacetKind::ManifoldBoundary { l } else { 0.0 })
                            .collect();
                        Self::surface_values(mesh, vals)?
                    }
                }
            }
            (None, Some(t)) => match cfg.kind {
                MeasureKind::VolumeDensity => Self::volume_values(mesh, t.clone())?,
                MeasureKind::SurfaceDensity => Self::surface_values(mesh, t.clone())?,
            },
            _ => return Err(Error::Config("give exactly one of expr and table".into())),
        };
        if let Some(p) = cfg.exponent {
            if !(p >= 1.0) {
                return Err(Error::Config(format!("exponent must be at least 1, got {p}")));
            }
        }
        Ok(Self { split_linf: cfg.split_linf, exponent: cfg.exponent, ..m })
    }

    pub fn with_split(mut self, linf: f64) -> Self {
        self.split_linf = Some(linf);
        self
    }

    pub fn with_exponent(mut self, p: f64) -> Self {
        self.exponent = Some(p);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0.0)
    }

    /// `(k₁, k₂)` with `k₂` the clamp of `k` to `[-L, L]`; without a split
    /// bound everything goes to `k₁`.
    pub fn split(&self) -> (Vec<f64>, Vec<f64>) {
        match self.split_linf {
            Some(l) => {
                let k2: Vec<f64> = self.values.iter().map(|x| x.clamp(-l, l)).collect();
                let k1 = self.values.iter().zip(&k2).map(|(x, y)| x - y).collect();
                (k1, k2)
            }
            None => (self.values.clone(), vec![0.0; self.values.len()]),
        }
    }

    /// Exponent `α` of the small-time blow-up `s^{-α}` of `∫p(s,x,·)d|κ|`.
    pub fn small_time_exponent(&self, d: usize) -> f64 {
        match self.kind {
            MeasureKind::VolumeDensity => self.exponent.map_or(0.0, |p| d as f64 / (2.0 * p)),
            MeasureKind::SurfaceDensity => 0.5,
        }
    }

    /// Vertex masses `κ({v})` of the lumped measure on all mesh vertices;
    /// facet densities are spread evenly over the facet vertices.
    pub fn lumped(&self, mesh: &Mesh) -> Vec<f64> {
        match self.kind {
            MeasureKind::VolumeDensity => {
                lumped_mass(mesh).iter().zip(&self.values).map(|(m, k)| m * k).collect()
            }
            MeasureKind::SurfaceDensity => {
                let mut q = vec![0.0; mesh.n_vertices()];
                for (i, f) in mesh.facets().iter().enumerate() {
                    let l = self.values[i];
                    if l == 0.0 {
                        continue;
                    }
                    let share = l * facet_measure(mesh, i) / f.vertices.len() as f64;
                    for &v in &f.vertices {
                        q[v] += share;
                    }
                }
                q
            }
        }
    }

    /// Lumped masses restricted to the free dofs of `op`.
    pub fn lumped_on(&self, mesh: &Mesh, op: &DiscreteOperator) -> Vec<f64> {
        op.restrict_vector(&self.lumped(mesh))
    }

    /// `|κ|`.
    pub fn abs(&self) -> Self {
        Self { values: self.values.iter().map(|x| x.abs()).collect(), ..self.clone() }
    }

    /// Negative part `κ⁻ ≥ 0`.
    pub fn negative_part(&self) -> Self {
        Self { values: self.values.iter().map(|x| (-x).max(0.0)).collect(), ..self.clone() }
    }
}
