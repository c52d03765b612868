use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::femcore::{DiscreteOperator, Mesh};
use crate::par;

/// Volume of the cells whose vertices all lie at graph distance `< s`.
pub fn ball_volume(mesh: &Mesh, dist: &[f64], s: f64) -> f64 {
    (0..mesh.n_cells())
        .filter(|&c| mesh.cell(c).iter().all(|&v| dist[v] < s))
        .map(|c| mesh.cell_volume(c))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingReport {
    pub constant: f64,
    pub pairs: usize,
    pub skipped: usize,
}

/// Smallest `C ≥ 1` with `vol B_s ≤ C vol B_{s'} (s/s')^d e^{Cs}` over the
/// sample vertices and all pairs `s' ≤ s` of the dyadic radii
/// `s_max·2^{-k}` that stay above the mesh width.
pub fn doubling_constant(mesh: &Mesh, samples: &[usize], s_max: f64) -> Result<DoublingReport> {
    if !(s_max > 0.0) || samples.is_empty() {
        return Err(Error::InvalidArgument("doubling check needs samples and s_max > 0".into()));
    }
    let d = mesh.dim() as i32;
    let mut radii = Vec::new();
    let mut s = s_max;
    while s >= 2.0 * mesh.h() {
        radii.push(s);
        s *= 0.5;
    }
    radii.reverse();
    let per_sample = par::map_slice(samples, |&x| {
        let dist = mesh.distances_from(&[x], Some(s_max));
        radii.iter().map(|&s| ball_volume(mesh, &dist, s)).collect::<Vec<_>>()
    });
    let mut rep = DoublingReport { constant: 1.0, pairs: 0, skipped: 0 };
    for vols in per_sample {
        for (i, &small) in radii.iter().enumerate() {
            for (j, &large) in radii.iter().enumerate().skip(i) {
                let (v0, v1) = (vols[i], vols[j]);
                if v0 <= 0.0 {
                    rep.skipped += 1;
                    continue;
                }
                rep.pairs += 1;
                let rho = v1 / (v0 * (large / small).powi(d));
                rep.constant = rep.constant.max(solve_c(rho, large));
            }
        }
    }
    Ok(rep)
}

/// Smallest `C ≥ 1` with `C e^{Cs} ≥ rho`.
fn solve_c(rho: f64, s: f64) -> f64 {
    let f = |c: f64| c * (c * s).exp();
    if f(1.0) >= rho {
        return 1.0;
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while f(hi) < rho {
        hi *= 2.0;
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= rho {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Sobolev exponent used by [`sobolev_ratio`].
pub fn sobolev_exponent(d: usize) -> f64 {
    (d + 2).max(4) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevReport {
    pub ratio: f64,
    pub trials: usize,
    pub skipped: usize,
}

/// Empirical Sobolev constant on `B_r(x)`:
///
/// `max ‖f‖²_{2N/(N-2)} / (vol[B_r]^{-2/N} r² ∫(|df|² + r^{-2} f²))`
///
/// over hat bumps `(1 - dist(z,·)/ρ)_+` with random centre `z` and radius `ρ`
/// inside the ball. Trial 0 is the bump centred at `x` with `ρ = r`.
pub fn sobolev_ratio(
    mesh: &Mesh,
    op: &DiscreteOperator,
    x: usize,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<SobolevReport> {
    if !(r > 0.0) || trials == 0 {
        return Err(Error::InvalidArgument("sobolev check needs r > 0 and at least one trial".into()));
    }
    let n = sobolev_exponent(mesh.dim());
    let q = 2.0 * n / (n - 2.0);
    let dist = mesh.distances_from(&[x], Some(r));
    let inside: Vec<usize> = (0..mesh.n_vertices()).filter(|&v| dist[v] < r).collect();
    let vol_ball = ball_volume(mesh, &dist, r);
    if vol_ball <= 0.0 {
        return Err(Error::EmptyDomain);
    }
    let results = par::map_indexed(trials, |i| {
        let (z, rho) = if i == 0 {
            (x, r)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let z = inside[rng.random_range(0..inside.len())];
            let room = r - dist[z];
            (z, room * rng.random_range(0.25..=1.0))
        };
        let dz = mesh.distances_from(&[z], Some(rho));
        let global: Vec<f64> = dz.iter().map(|&s| if s < rho { 1.0 - s / rho } else { 0.0 }).collect();
        let f = op.restrict_vector(&global);
        let m = op.mass();
        let l2: f64 = f.iter().zip(m).map(|(a, w)| a * a * w).sum();
        let lq: f64 = f.iter().zip(m).map(|(a, w)| a.abs().powf(q) * w).sum();
        if l2 <= 0.0 || lq <= 0.0 {
            return None;
        }
        let grad = op.stiffness().quad_form(&f);
        let rhs = vol_ball.powf(-2.0 / n) * r * r * (grad + l2 / (r * r));
        Some(lq.powf(2.0 / q) / rhs)
    });
    let mut rep = SobolevReport { ratio: 0.0, trials: 0, skipped: 0 };
    for v in results {
        match v {
            Some(x) => {
                rep.trials += 1;
                rep.ratio = rep.ratio.max(x);
            }
            None => rep.skipped += 1,
        }
    }
    if rep.trials == 0 {
        return Err(Error::EmptyDomain);
    }
    Ok(rep)
}
