use nalgebra::{DMatrix, DVector};

use super::form::schroedinger_evolve;
use super::measure::{KatoMeasure, MeasureKind};
use crate::error::{Error, Result};
use crate::femcore::{DiscreteOperator, Mesh};
use crate::heat::evolve;
use crate::par;

/// Calibrated slope of the discretisation tolerance `tol(h) = C·h`, relative
/// to `max |df|`.
pub const GRADIENT_TOL_SLOPE: f64 = 0.1;

pub fn gradient_tolerance(h: f64) -> f64 {
    GRADIENT_TOL_SLOPE * h
}

/// `|du|_g` on every cell for a P1 function given by vertex values.
pub fn cell_gradient_norms(mesh: &Mesh, u: &[f64]) -> Vec<f64> {
    let d = mesh.dim();
    par::map_indexed(mesh.n_cells(), |c| {
        let cell = mesh.cell(c);
        let p0 = mesh.vertex(cell[0]);
        let b = DMatrix::from_fn(d, d, |i, j| mesh.vertex(cell[j + 1])[i] - p0[i]);
        let delta = DVector::from_fn(d, |j, _| u[cell[j + 1]] - u[cell[0]]);
        let Some(grad) = b.transpose().lu().solve(&delta) else { return f64::NAN };
        let g = mesh.cell_metric_matrix(c);
        let Some(ginv) = g.try_inverse() else { return f64::NAN };
        (grad.transpose() * ginv * &grad)[(0, 0)].max(0.0).sqrt()
    })
}

/// Volume-weighted average of cell values at the vertices.
pub fn vertex_average(mesh: &Mesh, cell_values: &[f64]) -> Vec<f64> {
    let mut sum = vec![0.0; mesh.n_vertices()];
    let mut w = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let vol = mesh.cell_volume(c);
        for &v in mesh.cell(c) {
            sum[v] += vol * cell_values[c];
            w[v] += vol;
        }
    }
    sum.iter().zip(&w).map(|(s, w)| if *w > 0.0 { s / w } else { 0.0 }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    /// `max_cells (|dP_t f| − P_t^{κ/2}|df|)⁺`.
    pub max_violation: f64,
    /// `max |df|`, the scale of the test function.
    pub scale: f64,
    pub cells: usize,
    /// `|dP_t f| − P_t^{κ/2}|df|` per cell, NaN where unchecked.
    pub per_cell: Vec<f64>,
}

impl GradientReport {
    pub fn relative_violation(&self) -> f64 {
        if self.scale > 0.0 {
            self.max_violation / self.scale
        } else {
            0.0
        }
    }

    /// Relative violation over the checked cells accepted by `keep`.
    pub fn relative_violation_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        if !(self.scale > 0.0) {
            return 0.0;
        }
        let worst = (0..self.per_cell.len())
            .filter(|&c| self.per_cell[c].is_finite() && keep(c))
            .map(|c| self.per_cell[c])
            .fold(0.0, f64::max);
        worst / self.scale
    }
}

/// Compares `|dP_t f|` per cell with the cell average of
/// `P_t^{κ/2}` applied to the vertex-averaged `|df|`. Only cells whose
/// vertices are all free dofs are checked.
pub fn gradient_estimate_check(
    mesh: &Mesh,
    op: &DiscreteOperator,
    kappa: &KatoMeasure,
    f: &[f64],
    t: f64,
    steps: usize,
) -> Result<GradientReport> {
    if kappa.kind != MeasureKind::VolumeDensity {
        return Err(Error::InvalidArgument("the gradient estimate takes a volume density".into()));
    }
    if f.len() != mesh.n_vertices() {
        return Err(Error::InvalidArgument("test function must have one value per vertex".into()));
    }
    let u = op.extend_vector(&evolve(op, &op.restrict_vector(f), t, steps)?);
    let lhs = cell_gradient_norms(mesh, &u);
    let df = cell_gradient_norms(mesh, f);
    let w = op.restrict_vector(&vertex_average(mesh, &df));
    let pw = op.extend_vector(&schroedinger_evolve(op, mesh, kappa, 1.0, &w, t, steps)?);
    let mut rep = GradientReport {
        max_violation: 0.0,
        scale: df.iter().copied().fold(0.0, f64::max),
        cells: 0,
        per_cell: vec![f64::NAN; mesh.n_cells()],
    };
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        if cell.iter().any(|&v| op.local_index(v).is_none()) {
            continue;
        }
        rep.cells += 1;
        let rhs = cell.iter().map(|&v| pw[v]).sum::<f64>() / cell.len() as f64;
        rep.per_cell[c] = lhs[c] - rhs;
        rep.max_violation = rep.max_violation.max(lhs[c] - rhs);
    }
    Ok(rep)
}
