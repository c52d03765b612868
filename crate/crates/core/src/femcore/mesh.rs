use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, MetricField};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FacetKind {
    /// Lies on the boundary of the manifold itself (Neumann side).
    ManifoldBoundary,
    /// Truncation of a larger manifold by the chart box (Dirichlet side).
    ArtificialCutoff,
}

/// A boundary facet; the outward normal is `+e_axis` if `upper`, `-e_axis`
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFacet {
    pub vertices: Vec<usize>,
    pub cell: usize,
    pub axis: usize,
    pub upper: bool,
    pub kind: FacetKind,
}

/// Weighted edge graph of a mesh in CSR layout.
#[derive(Debug, Clone)]
pub struct EdgeGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl EdgeGraph {
    pub fn neighbours(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }
}

/// Simplicial mesh of a chart image with per-cell metric samples.
///
/// Storage is flat: vertex coordinates with stride `d`, cells with stride
/// `d + 1`, cell metrics with stride `d²` (row major).
#[derive(Clone)]
pub struct Mesh {
    dim: usize,
    h: f64,
    coords: Vec<f64>,
    cells: Vec<usize>,
    facets: Vec<BoundaryFacet>,
    cell_metric: Vec<f64>,
    cell_lebesgue: Vec<f64>,
    cell_volume: Vec<f64>,
    metric: MetricField,
    incidence: OnceLock<(Vec<usize>, Vec<usize>)>,
    graph: OnceLock<EdgeGraph>,
}

impl std::fmt::Debug for Mesh {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mesh")
            .field("dim", &self.dim)
            .field("h", &self.h)
            .field("vertices", &self.n_vertices())
            .field("cells", &self.n_cells())
            .field("facets", &self.facets.len())
            .finish()
    }
}

impl Mesh {
    /// Assembles a mesh from raw parts, sampling `metric` at cell barycenters.
    pub fn from_parts(
        dim: usize,
        h: f64,
        coords: Vec<f64>,
        cells: Vec<usize>,
        facets: Vec<BoundaryFacet>,
        metric: MetricField,
    ) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 || cells.len() % (dim + 1) != 0 {
            return Err(Error::InvalidArgument("inconsistent mesh storage".into()));
        }
        let n_cells = cells.len() / (dim + 1);
        let per_cell = par::map_indexed(n_cells, |c| -> Result<(Vec<f64>, f64, f64)> {
            let verts = &cells[c * (dim + 1)..(c + 1) * (dim + 1)];
            let mut bary = vec![0.0; dim];
            for &v in verts {
                for k in 0..dim {
                    bary[k] += coords[v * dim + k];
                }
            }
            bary.iter_mut().for_each(|x| *x /= (dim + 1) as f64);
            let leb = simplex_lebesgue(&coords, dim, verts);
            if !(leb > 0.0) {
                return Err(Error::DegenerateCell { cell: c });
            }
            let g = metric.eval(&bary);
            let sym = (&g + g.transpose()) * 0.5;
            if (&g - g.transpose()).amax() > 1e-12 * g.amax().max(1.0) || !g.iter().all(|x| x.is_finite()) {
                return Err(Error::NotPositiveDefinite { point: bary });
            }
            let chol = Cholesky::new(sym.clone()).ok_or(Error::NotPositiveDefinite { point: bary.clone() })?;
            let det: f64 = chol.l().diagonal().iter().map(|x| x * x).product();
            Ok((sym.as_slice().to_vec(), leb, leb * det.sqrt()))
        });
        let mut cell_metric = Vec::with_capacity(n_cells * dim * dim);
        let mut cell_lebesgue = Vec::with_capacity(n_cells);
        let mut cell_volume = Vec::with_capacity(n_cells);
        for r in per_cell {
            let (g, leb, vol) = r?;
            cell_metric.extend_from_slice(&g);
            cell_lebesgue.push(leb);
            cell_volume.push(vol);
        }
        Ok(Self {
            dim,
            h,
            coords,
            cells,
            facets,
            cell_metric,
            cell_lebesgue,
            cell_volume,
            metric,
            incidence: OnceLock::new(),
            graph: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cell_volume.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    pub fn metric_field(&self) -> &MetricField {
        &self.metric
    }

    /// Metric sample of cell `c` (row major, `d²` entries).
    pub fn cell_metric(&self, c: usize) -> &[f64] {
        let s = self.dim * self.dim;
        &self.cell_metric[c * s..(c + 1) * s]
    }

    pub fn cell_metric_matrix(&self, c: usize) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.dim, self.dim, self.cell_metric(c))
    }

    pub fn cell_lebesgue(&self, c: usize) -> f64 {
        self.cell_lebesgue[c]
    }

    /// Lebesgue volume times `√det g` of cell `c`.
    pub fn cell_volume(&self, c: usize) -> f64 {
        self.cell_volume[c]
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volume
    }

    pub fn barycenter(&self, c: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.dim];
        for &v in self.cell(c) {
            for (k, x) in self.vertex(v).iter().enumerate() {
                b[k] += x;
            }
        }
        b.iter_mut().for_each(|x| *x /= (self.dim + 1) as f64);
        b
    }

    /// Cells incident to vertex `v`.
    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        let (off, idx) = self.incidence.get_or_init(|| {
            let n = self.n_vertices();
            let mut count = vec![0usize; n + 1];
            for &v in &self.cells {
                count[v + 1] += 1;
            }
            for i in 0..n {
                count[i + 1] += count[i];
            }
            let mut fill = count.clone();
            let mut idx = vec![0usize; self.cells.len()];
            for c in 0..self.n_cells() {
                for &v in self.cell(c) {
                    idx[fill[v]] = c;
                    fill[v] += 1;
                }
            }
            (count, idx)
        });
        &idx[off[v]..off[v + 1]]
    }

    /// Vertices lying on a facet of the given kind.
    pub fn facet_vertices(&self, kind: FacetKind) -> Vec<usize> {
        let mut flag = vec![false; self.n_vertices()];
        for f in self.facets.iter().filter(|f| f.kind == kind) {
            for &v in &f.vertices {
                flag[v] = true;
            }
        }
        (0..flag.len()).filter(|&v| flag[v]).collect()
    }

    /// Vertex closest to `point` in chart coordinates (lowest index on ties).
    pub fn nearest_vertex(&self, point: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for v in 0..self.n_vertices() {
            let d2: f64 = self.vertex(v).iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best.0 {
                best = (d2, v);
            }
        }
        best.1
    }

    /// Edge graph weighted by `√g_mid(e, e)`, the metric sampled at edge midpoints.
    pub fn edge_graph(&self) -> &EdgeGraph {
        self.graph.get_or_init(|| {
            let n = self.n_vertices();
            let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
            for c in 0..self.n_cells() {
                let cell = self.cell(c);
                for a in 0..cell.len() {
                    for b in 0..cell.len() {
                        if a != b {
                            adj[cell[a]].push(cell[b]);
                        }
                    }
                }
            }
            for list in &mut adj {
                list.sort_unstable();
                list.dedup();
            }
            let weights = par::map_indexed(n, |u| {
                adj[u]
                    .iter()
                    .map(|&v| {
                        let (pu, pv) = (self.vertex(u), self.vertex(v));
                        let mid: Vec<f64> = pu.iter().zip(pv).map(|(a, b)| 0.5 * (a + b)).collect();
                        let e: Vec<f64> = pu.iter().zip(pv).map(|(a, b)| b - a).collect();
                        self.metric.norm_sq(&mid, &e).max(0.0).sqrt()
                    })
                    .collect::<Vec<f64>>()
            });
            let mut offsets = Vec::with_capacity(n + 1);
            offsets.push(0);
            let mut targets = Vec::new();
            let mut flat = Vec::new();
            for (list, w) in adj.into_iter().zip(weights) {
                targets.extend(list);
                flat.extend(w);
                offsets.push(targets.len());
            }
            EdgeGraph { offsets, targets, weights: flat }
        })
    }

    /// Graph distances from a set of sources; `INFINITY` where unreachable or
    /// beyond `limit`.
    pub fn distances_from(&self, sources: &[usize], limit: Option<f64>) -> Vec<f64> {
        let graph = self.edge_graph();
        let limit = limit.unwrap_or(f64::INFINITY);
        let mut dist = vec![f64::INFINITY; self.n_vertices()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(HeapEntry(0.0, s));
        }
        while let Some(HeapEntry(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (v, w) in graph.neighbours(u) {
                let nd = d + w;
                if nd < dist[v] && nd <= limit {
                    dist[v] = nd;
                    heap.push(HeapEntry(nd, v));
                }
            }
        }
        dist
    }

    /// Cells whose vertices all lie in `vertices`.
    pub fn cells_within(&self, vertices: &[usize]) -> Vec<usize> {
        let mut inside = vec![false; self.n_vertices()];
        for &v in vertices {
            inside[v] = true;
        }
        (0..self.n_cells()).filter(|&c| self.cell(c).iter().all(|&v| inside[v])).collect()
    }
}

#[derive(PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn simplex_lebesgue(coords: &[f64], dim: usize, verts: &[usize]) -> f64 {
    let p0 = &coords[verts[0] * dim..verts[0] * dim + dim];
    let m = DMatrix::from_fn(dim, dim, |i, j| coords[verts[j + 1] * dim + i] - p0[i]);
    let fact: f64 = (1..=dim).map(|k| k as f64).product();
    m.determinant().abs() / fact
}

/// Structured simplicial mesh of the master chart box: intervals in d = 1,
/// two triangles per square split along the main diagonal in d = 2, six
/// Kuhn tetrahedra per cube in d = 3.
pub fn build_mesh(m: &Manifold, h: f64) -> Result<Mesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("mesh size must be positive, got {h}")));
    }
    let d = m.dim();
    if d > 3 {
        return Err(Error::InvalidArgument(format!("meshing is implemented for d <= 3, got {d}")));
    }
    let image = &m.master().image;
    if h > image.min_side() {
        return Err(Error::InvalidArgument(format!(
            "mesh size {h} exceeds the smallest chart side {}",
            image.min_side()
        )));
    }
    let n: Vec<usize> = (0..d)
        .map(|k| (((image.upper[k] - image.lower[k]) / h).round() as usize).max(1))
        .collect();
    let mut stride = vec![1usize; d];
    for k in 1..d {
        stride[k] = stride[k - 1] * (n[k - 1] + 1);
    }
    let nv: usize = n.iter().map(|x| x + 1).product();
    let mut coords = Vec::with_capacity(nv * d);
    for v in 0..nv {
        for k in 0..d {
            let i = (v / stride[k]) % (n[k] + 1);
            let x = if i == n[k] {
                image.upper[k]
            } else {
                image.lower[k] + (image.upper[k] - image.lower[k]) * i as f64 / n[k] as f64
            };
            coords.push(x);
        }
    }
    let perms = permutations(d);
    let n_boxes: usize = n.iter().product();
    let mut cells = Vec::with_capacity(n_boxes * perms.len() * (d + 1));
    for b in 0..n_boxes {
        let mut rem = b;
        let mut base = 0;
        for k in 0..d {
            base += (rem % n[k]) * stride[k];
            rem /= n[k];
        }
        for p in &perms {
            let mut v = base;
            cells.push(v);
            for &axis in p {
                v += stride[axis];
                cells.push(v);
            }
        }
    }
    let grid_index = |v: usize, k: usize| (v / stride[k]) % (n[k] + 1);
    let mut facets = Vec::new();
    for c in 0..cells.len() / (d + 1) {
        let cell = &cells[c * (d + 1)..(c + 1) * (d + 1)];
        for skip in 0..=d {
            let fv: Vec<usize> = (0..=d).filter(|&i| i != skip).map(|i| cell[i]).collect();
            for k in 0..d {
                for (upper, target) in [(false, 0), (true, n[k])] {
                    if fv.iter().all(|&v| grid_index(v, k) == target) {
                        let kind = if image.half_space && k == d - 1 && !upper {
                            FacetKind::ManifoldBoundary
                        } else {
                            FacetKind::ArtificialCutoff
                        };
                        facets.push(BoundaryFacet { vertices: fv.clone(), cell: c, axis: k, upper, kind });
                    }
                }
            }
        }
    }
    Mesh::from_parts(d, h, coords, cells, facets, m.metric().clone())
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    match d {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ],
    }
}
