use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bessel::faber_krahn_constant;
use super::eigen::lambda1;
use crate::error::{Error, Result};
use crate::femcore::{assemble, dirichlet_restrict, reflect_domain, DiscreteOperator, FacetKind, Mesh, Reflection};
use crate::par;

/// Frozen Faber–Krahn lower constant `a(b, d) = c_d · b^{-(d+1)}`.
pub fn frozen_fk_constant(b: f64, d: usize) -> f64 {
    faber_krahn_constant(d) * b.powi(-(d as i32 + 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkSweepConfig {
    /// Center vertex of the ball.
    pub center: usize,
    pub radius: f64,
    pub n_domains: usize,
    pub seed: u64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSample {
    pub index: usize,
    pub cells: Vec<usize>,
    pub dofs: Vec<usize>,
    pub volume: f64,
    pub lambda1: f64,
    /// `λ₁(O)·vol(O)^{2/d}`.
    pub q: f64,
    pub touches_boundary: bool,
    /// `λ₁(O ∪ ρ(O))·vol(O)^{2/d}` for boundary-touching domains.
    pub q_reflected: Option<f64>,
    /// Draws rejected before this one because no dof survived.
    pub redraws: usize,
}

#[derive(Debug, Clone)]
pub struct FkReport {
    pub samples: Vec<DomainSample>,
    pub min_q: f64,
    pub argmin: usize,
    pub c_d: f64,
    pub a: f64,
    pub violations: usize,
}

/// Interior dofs of a cell union: vertices whose incident cells all belong
/// to it and which do not lie on the artificial cutoff.
pub fn domain_dofs(mesh: &Mesh, cells: &[usize]) -> Vec<usize> {
    let mut in_set = vec![false; mesh.n_cells()];
    for &c in cells {
        in_set[c] = true;
    }
    let mut cut = vec![false; mesh.n_vertices()];
    for v in mesh.facet_vertices(FacetKind::ArtificialCutoff) {
        cut[v] = true;
    }
    let mut seen = vec![false; mesh.n_vertices()];
    let mut out = Vec::new();
    for &c in cells {
        for &v in mesh.cell(c) {
            if !seen[v] {
                seen[v] = true;
                if !cut[v] && mesh.vertex_cells(v).iter().all(|&k| in_set[k]) {
                    out.push(v);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// `(λ₁, vol, q)` of the Dirichlet problem on a cell union.
pub fn domain_quotient(mesh: &Mesh, op: &DiscreteOperator, cells: &[usize]) -> Result<(f64, f64, f64)> {
    let dofs = domain_dofs(mesh, cells);
    if dofs.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let vol: f64 = cells.iter().map(|&c| mesh.cell_volume(c)).sum();
    let l = lambda1(&dirichlet_restrict(op, &dofs)?)?.lambda1;
    Ok((l, vol, l * vol.powf(2.0 / mesh.dim() as f64)))
}

/// Largest facet-connected component of a cell set (ties: smallest first cell).
pub fn largest_component(mesh: &Mesh, cells: &[usize]) -> Vec<usize> {
    let d = mesh.dim();
    let mut in_set = vec![false; mesh.n_cells()];
    for &c in cells {
        in_set[c] = true;
    }
    let mut label = vec![usize::MAX; mesh.n_cells()];
    let mut best: Vec<usize> = Vec::new();
    let mut sorted = cells.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &start in &sorted {
        if label[start] != usize::MAX {
            continue;
        }
        let mut comp = vec![start];
        label[start] = start;
        let mut head = 0;
        while head < comp.len() {
            let c = comp[head];
            head += 1;
            let verts = mesh.cell(c);
            for &v in verts {
                for &k in mesh.vertex_cells(v) {
                    if in_set[k] && label[k] == usize::MAX {
                        let shared = mesh.cell(k).iter().filter(|w| verts.contains(w)).count();
                        if shared == d {
                            label[k] = start;
                            comp.push(k);
                        }
                    }
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    best
}

/// Random cell unions inside the metric ball `B_r(x)`, each checked against
/// the frozen constant `a(b, d)`.
///
/// Domains touching the manifold boundary are also solved on their mirror
/// double `O ∪ ρ(O)`.
pub fn faber_krahn_sweep(mesh: &Mesh, op: &DiscreteOperator, cfg: &FkSweepConfig) -> Result<FkReport> {
    let d = mesh.dim();
    if cfg.n_domains == 0 {
        return Err(Error::EmptyDomain);
    }
    let dist = mesh.distances_from(&[cfg.center], Some(cfg.radius));
    let ball: Vec<usize> = (0..mesh.n_cells())
        .filter(|&c| mesh.cell(c).iter().all(|&v| dist[v] < cfg.radius))
        .collect();
    if ball.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let all: Vec<usize> = (0..mesh.n_vertices()).collect();
    let plane = mesh.facet_vertices(FacetKind::ManifoldBoundary);
    let reflection: Option<(Reflection, DiscreteOperator)> = if plane.is_empty() {
        None
    } else {
        let r = reflect_domain(mesh, &all)?;
        let rop = assemble(&r.mesh)?;
        Some((r, rop))
    };
    let mut on_plane = vec![false; mesh.n_vertices()];
    for v in plane {
        on_plane[v] = true;
    }

    let results = par::map_indexed(cfg.n_domains, |i| -> Result<DomainSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let mut redraws = 0;
        loop {
            if redraws > 1000 {
                return Err(Error::EmptyDomain);
            }
            let k = rng.random_range(1..=ball.len());
            let mut pool = ball.clone();
            for j in 0..k {
                let pick = rng.random_range(j..pool.len());
                pool.swap(j, pick);
            }
            let cells = largest_component(mesh, &pool[..k]);
            let dofs = domain_dofs(mesh, &cells);
            if dofs.is_empty() {
                redraws += 1;
                continue;
            }
            let volume: f64 = cells.iter().map(|&c| mesh.cell_volume(c)).sum();
            let l = lambda1(&dirichlet_restrict(op, &dofs)?)?.lambda1;
            let scale = volume.powf(2.0 / d as f64);
            let touches = dofs.iter().any(|&v| on_plane[v]);
            let q_reflected = match (&reflection, touches) {
                (Some((r, rop)), true) => {
                    let omega = r.double(&dofs);
                    Some(lambda1(&dirichlet_restrict(rop, &omega)?)?.lambda1 * scale)
                }
                _ => None,
            };
            return Ok(DomainSample {
                index: i,
                cells,
                dofs,
                volume,
                lambda1: l,
                q: l * scale,
                touches_boundary: touches,
                q_reflected,
                redraws,
            });
        }
    });
    let samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    let a = frozen_fk_constant(cfg.b, d);
    let (argmin, min_q) = samples
        .iter()
        .map(|s| (s.index, s.q))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let violations = samples.iter().filter(|s| !(s.q >= a)).count();
    Ok(FkReport { samples, min_q, argmin, c_d: faber_krahn_constant(d), a, violations })
}
