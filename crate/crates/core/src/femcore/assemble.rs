use nalgebra::DMatrix;

use super::mesh::{FacetKind, Mesh};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::par;

/// Stiffness and lumped mass on the active vertex set.
///
/// `K_ij = ∫ g*(∇φ_i, ∇φ_j) √det g dL^d`, so the energy of `f` is `½ fᵀKf`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    free_dofs: Vec<usize>,
    local_of: Vec<usize>,
    neumann_like: bool,
}

impl DiscreteOperator {
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Global vertex id of each local dof.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_global(&self) -> usize {
        self.local_of.len()
    }

    /// No Dirichlet rows were removed.
    pub fn is_neumann_like(&self) -> bool {
        self.neumann_like
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.local_of.get(global).copied().filter(|&l| l != usize::MAX)
    }

    /// `½ fᵀ K f` for a vector on the free dofs.
    pub fn energy(&self, f: &[f64]) -> f64 {
        0.5 * self.stiffness.quad_form(f)
    }

    /// Samples a vertex function (indexed globally) on the free dofs.
    pub fn restrict_vector(&self, global: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&g| global[g]).collect()
    }

    /// Same dofs and mass with another stiffness matrix.
    pub fn with_stiffness(&self, stiffness: CsrMatrix) -> Result<Self> {
        if stiffness.dim() != self.n_free() {
            return Err(Error::InvalidArgument("stiffness does not match the free dofs".into()));
        }
        Ok(Self { stiffness, ..self.clone() })
    }

    /// Extends a free-dof vector by zero.
    pub fn extend_vector(&self, local: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_global()];
        for (&g, &x) in self.free_dofs.iter().zip(local) {
            out[g] = x;
        }
        out
    }
}

/// Local P1 stiffness of one cell, row major `(d+1)²`.
fn local_stiffness(mesh: &Mesh, c: usize) -> Result<Vec<f64>> {
    let d = mesh.dim();
    let cell = mesh.cell(c);
    let p0 = mesh.vertex(cell[0]);
    let b = DMatrix::from_fn(d, d, |i, j| mesh.vertex(cell[j + 1])[i] - p0[i]);
    let binv = b.try_inverse().ok_or(Error::DegenerateCell { cell: c })?;
    let ginv = mesh
        .cell_metric_matrix(c)
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite { point: mesh.barycenter(c) })?;
    // rows of B⁻¹ are the gradients of barycentric coordinates 1..d
    let mut grads = DMatrix::zeros(d + 1, d);
    for j in 0..d {
        for k in 0..d {
            grads[(j + 1, k)] = binv[(j, k)];
            grads[(0, k)] -= binv[(j, k)];
        }
    }
    let local = &grads * ginv * grads.transpose() * mesh.cell_volume(c);
    let mut out = Vec::with_capacity((d + 1) * (d + 1));
    for i in 0..=d {
        for j in 0..=d {
            out.push(0.5 * (local[(i, j)] + local[(j, i)]));
        }
    }
    Ok(out)
}

/// P1 stiffness with piecewise-constant coefficients and lumped volume mass.
pub fn assemble(mesh: &Mesh) -> Result<DiscreteOperator> {
    let n = mesh.n_vertices();
    let d = mesh.dim();
    let locals = par::map_indexed(mesh.n_cells(), |c| local_stiffness(mesh, c));

    let graph = mesh.edge_graph();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for v in 0..n {
        let mut row: Vec<usize> = graph.neighbours(v).map(|(u, _)| u).collect();
        row.push(v);
        row.sort_unstable();
        col_idx.extend(row);
        row_ptr.push(col_idx.len());
    }
    let mut values = vec![0.0; col_idx.len()];
    let mut mass = vec![0.0; n];
    for (c, local) in locals.into_iter().enumerate() {
        let local = local?;
        let cell = mesh.cell(c);
        let share = mesh.cell_volume(c) / (d + 1) as f64;
        for (a, &va) in cell.iter().enumerate() {
            mass[va] += share;
            let row = row_ptr[va]..row_ptr[va + 1];
            for (b, &vb) in cell.iter().enumerate() {
                let k = col_idx[row.clone()].binary_search(&vb).expect("pattern covers cell");
                values[row.start + k] += local[a * (d + 1) + b];
            }
        }
    }
    Ok(DiscreteOperator {
        stiffness: CsrMatrix::from_parts(n, row_ptr, col_idx, values),
        mass,
        free_dofs: (0..n).collect(),
        local_of: (0..n).collect(),
        neumann_like: true,
    })
}

/// Keeps only the dofs in `keep` (global vertex ids), imposing zero values on
/// all others.
pub fn dirichlet_restrict(op: &DiscreteOperator, keep: &[usize]) -> Result<DiscreteOperator> {
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let mut local = Vec::with_capacity(keep.len());
    for &g in &keep {
        local.push(op.local_index(g).ok_or_else(|| {
            Error::InvalidArgument(format!("vertex {g} is not a free dof of the operator"))
        })?);
    }
    let mut local_of = vec![usize::MAX; op.n_global()];
    for (l, &g) in keep.iter().enumerate() {
        local_of[g] = l;
    }
    Ok(DiscreteOperator {
        stiffness: op.stiffness.restrict(&local),
        mass: local.iter().map(|&l| op.mass[l]).collect(),
        neumann_like: op.neumann_like && keep.len() == op.n_free(),
        free_dofs: keep,
        local_of,
    })
}

/// Dirichlet condition on the artificial far-field cutoff; true manifold
/// boundary stays Neumann.
pub fn far_field_cutoff(op: &DiscreteOperator, mesh: &Mesh) -> Result<DiscreteOperator> {
    let mut cut = vec![false; mesh.n_vertices()];
    for v in mesh.facet_vertices(FacetKind::ArtificialCutoff) {
        cut[v] = true;
    }
    let keep: Vec<usize> = op.free_dofs().iter().copied().filter(|&g| !cut[g]).collect();
    dirichlet_restrict(op, &keep)
}
