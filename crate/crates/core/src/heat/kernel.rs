use super::evolve::{heat_generator, HeatScheme, Stepper};
use crate::error::{Error, Result};
use crate::femcore::{DiscreteOperator, Mesh};
use crate::par;

/// `K` log-spaced times from `t_min` to `t_max`; with `t_max/t_min = 2^{K-1}`
/// this is the dyadic grid `t_k = t_max·2^{k-K}`.
pub fn geometric_times(t_min: f64, t_max: f64, k: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max >= t_min) || k == 0 {
        return Err(Error::InvalidArgument(format!("bad time grid ({t_min}, {t_max}, {k})")));
    }
    if k == 1 {
        return Ok(vec![t_max]);
    }
    let ratio = (t_max / t_min).ln();
    let mut ts: Vec<f64> = (0..k).map(|i| t_min * (ratio * i as f64 / (k - 1) as f64).exp()).collect();
    ts[0] = t_min;
    ts[k - 1] = t_max;
    Ok(ts)
}

/// Dyadic grid `t_max·2^{k-K}`, `k = 1..K`.
pub fn dyadic_times(t_max: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|i| t_max * 2f64.powi(i as i32 - k as i32)).collect()
}

/// Columns `p(t_k, x, ·)` for one source, indexed by global vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelGrid {
    pub source: usize,
    pub times: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
    /// Negative values set to zero.
    pub clamps: usize,
    /// Most negative raw value (0 if none).
    pub min_raw: f64,
    pub scheme: HeatScheme,
}

impl HeatKernelGrid {
    /// `∫ p(t_k, x, ·) dvol` for each time.
    pub fn mass_profile(&self, mass: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| c.iter().zip(mass).map(|(p, m)| p * m).sum()).collect()
    }
}

/// Heat kernel columns from `δ_x = e_x / m_x`.
pub fn heat_kernel(op: &DiscreteOperator, x: usize, times: &[f64], scheme: HeatScheme) -> Result<HeatKernelGrid> {
    let stepper = Stepper::new(heat_generator(op), op.mass().to_vec(), times, scheme)?;
    kernel_with(&stepper, op, x, scheme)
}

fn kernel_with(stepper: &Stepper, op: &DiscreteOperator, x: usize, scheme: HeatScheme) -> Result<HeatKernelGrid> {
    let lx = op
        .local_index(x)
        .ok_or_else(|| Error::InvalidArgument(format!("source vertex {x} is not a free dof")))?;
    let mut u0 = vec![0.0; op.n_free()];
    u0[lx] = 1.0 / op.mass()[lx];
    let mut clamps = 0;
    let mut min_raw: f64 = 0.0;
    let columns = stepper
        .run(&u0)
        .into_iter()
        .map(|u| {
            let mut g = op.extend_vector(&u);
            for p in &mut g {
                if *p < 0.0 {
                    min_raw = min_raw.min(*p);
                    clamps += 1;
                    *p = 0.0;
                }
            }
            g
        })
        .collect();
    Ok(HeatKernelGrid { source: x, times: stepper.times().to_vec(), columns, clamps, min_raw, scheme })
}

/// Heat kernels for several sources sharing one mesh, together with the
/// lumped masses and graph distances the verification routines need.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub dim: usize,
    /// Lumped volume mass of every mesh vertex.
    pub mass: Vec<f64>,
    pub grids: Vec<HeatKernelGrid>,
    /// Graph distance from each source to every vertex.
    pub distances: Vec<Vec<f64>>,
}

impl KernelSet {
    pub fn compute(
        mesh: &Mesh,
        op: &DiscreteOperator,
        sources: &[usize],
        times: &[f64],
        scheme: HeatScheme,
    ) -> Result<Self> {
        let stepper = Stepper::new(heat_generator(op), op.mass().to_vec(), times, scheme)?;
        let grids = par::map_slice(sources, |&x| kernel_with(&stepper, op, x, scheme))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let distances = par::map_slice(sources, |&x| mesh.distances_from(&[x], None));
        Ok(Self { dim: mesh.dim(), mass: lumped_mass(mesh), grids, distances })
    }

    pub fn times(&self) -> &[f64] {
        self.grids.first().map(|g| g.times.as_slice()).unwrap_or(&[])
    }

    /// Volume of the graph ball `{y : d(x, y) < r}` in lumped mass.
    pub fn ball_volume(&self, source_index: usize, r: f64) -> f64 {
        self.distances[source_index]
            .iter()
            .zip(&self.mass)
            .filter(|(d, _)| **d < r)
            .map(|(_, m)| m)
            .sum()
    }
}

/// Lumped volume mass of all mesh vertices.
pub fn lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let share = mesh.cell_volume(c) / (mesh.dim() + 1) as f64;
        for &v in mesh.cell(c) {
            m[v] += share;
        }
    }
    m
}

/// Vertices evenly spread over the free dofs (by index), for use as sources.
pub fn spread_sources(op: &DiscreteOperator, count: usize) -> Vec<usize> {
    let free = op.free_dofs();
    if count == 0 || free.is_empty() {
        return Vec::new();
    }
    let count = count.min(free.len());
    (0..count).map(|i| free[(2 * i + 1) * free.len() / (2 * count)]).collect()
}
