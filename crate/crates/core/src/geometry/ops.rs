use super::maps::BiLipschitzMap;
use crate::error::{Error, Result};
use crate::femcore::{DiscreteOperator, Mesh};

/// Riemannian volume of a set of cells.
pub fn volume(mesh: &Mesh, cells: &[usize]) -> f64 {
    cells.iter().map(|&c| mesh.cell_volume(c)).sum()
}

/// Shortest-path distance in the metric-weighted edge graph.
pub fn path_distance(mesh: &Mesh, i: usize, j: usize) -> Result<f64> {
    let n = mesh.n_vertices();
    if i >= n || j >= n {
        return Err(Error::InvalidArgument(format!("vertex out of range (mesh has {n})")));
    }
    let d = mesh.distances_from(&[i], None)[j];
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Disconnected { from: i, to: j })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormComparison {
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Indices of test functions skipped for having zero energy.
    pub skipped: Vec<usize>,
}

/// Range of `E_ḡ(f ∘ F⁻¹) / E_g(f)` over the test functions, with `F`
/// mapping the chart of `mesh_g` onto the chart of `mesh_gbar`.
pub fn dirichlet_form_comparison(
    mesh_g: &Mesh,
    op_g: &DiscreteOperator,
    mesh_gbar: &Mesh,
    op_gbar: &DiscreteOperator,
    f_map: &BiLipschitzMap,
    tests: &[&dyn Fn(&[f64]) -> f64],
) -> Result<FormComparison> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut skipped = Vec::new();
    for (k, f) in tests.iter().enumerate() {
        let on_g: Vec<f64> = (0..mesh_g.n_vertices()).map(|v| f(mesh_g.vertex(v))).collect();
        let on_gbar: Vec<f64> = (0..mesh_gbar.n_vertices())
            .map(|v| f(&f_map.apply_inverse(mesh_gbar.vertex(v))))
            .collect();
        let e = op_g.energy(&op_g.restrict_vector(&on_g));
        let ebar = op_gbar.energy(&op_gbar.restrict_vector(&on_gbar));
        if !(e > 1e-300) {
            skipped.push(k);
            continue;
        }
        let r = ebar / e;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if skipped.len() == tests.len() {
        return Err(Error::InvalidArgument("every test function has zero energy".into()));
    }
    Ok(FormComparison { ratio_min: lo, ratio_max: hi, skipped })
}
