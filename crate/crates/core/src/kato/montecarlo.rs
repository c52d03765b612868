use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::measure::{KatoMeasure, MeasureKind};
use crate::error::{Error, Result};
use crate::femcore::DiscreteOperator;
use crate::par;

/// Relative size of a positive off-diagonal stiffness entry tolerated as
/// round-off.
const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkConfig {
    pub paths: usize,
    pub t: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub vertex: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// Jump chain of the generator `½ M⁻¹K` on the free dofs.
#[derive(Debug, Clone)]
pub struct JumpChain {
    rate: Vec<f64>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    /// Cumulative jump probabilities per row; the remainder up to 1 kills.
    cumulative: Vec<f64>,
}

impl JumpChain {
    pub fn new(op: &DiscreteOperator) -> Result<Self> {
        let k = op.stiffness();
        let m = op.mass();
        let n = op.n_free();
        let mut rate = Vec::with_capacity(n);
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut cumulative = Vec::new();
        for i in 0..n {
            let kii = k.get(i, i);
            if !(kii > 0.0) {
                return Err(Error::InvalidArgument(format!("zero diagonal stiffness at dof {i}")));
            }
            rate.push(0.5 * kii / m[i]);
            let mut acc = 0.0;
            for (j, v) in k.row(i) {
                if j == i {
                    continue;
                }
                if v > MONOTONE_TOL * kii {
                    return Err(Error::NonMonotoneMesh { row: op.free_dofs()[i], col: op.free_dofs()[j], value: v });
                }
                if v < 0.0 {
                    acc += -v / kii;
                    targets.push(j);
                    cumulative.push(acc);
                }
            }
            if 1.0 - acc <= 1e-12 {
                if let Some(last) = cumulative.last_mut() {
                    *last = f64::INFINITY;
                }
            }
            offsets.push(targets.len());
        }
        Ok(Self { rate, offsets, targets, cumulative })
    }

    /// One path from local dof `start` up to time `t`: returns
    /// `e^{-∫k(b_s)ds} f(b_t)`, or 0 when killed.
    pub fn sample(&self, start: usize, t: f64, k: &[f64], f: &[f64], rng: &mut impl Rng) -> f64 {
        let mut v = start;
        let mut clock = 0.0;
        let mut a = 0.0;
        loop {
            let u: f64 = rng.random();
            let hold = -(1.0 - u).ln() / self.rate[v];
            if clock + hold >= t {
                a += k[v] * (t - clock);
                return (-a).exp() * f[v];
            }
            clock += hold;
            a += k[v] * hold;
            let u: f64 = rng.random();
            let row = self.offsets[v]..self.offsets[v + 1];
            let cum = &self.cumulative[row.clone()];
            let pick = cum.partition_point(|&c| c <= u);
            if pick == cum.len() {
                return 0.0;
            }
            v = self.targets[row.start + pick];
        }
    }
}

/// `E[e^{-a_t} f(b_t) 1_{t<ζ}]` for the jump chain killed at the Dirichlet
/// dofs, with `a_t = ∫₀^t k(b_s) ds`. `f` is indexed by global vertex.
///
/// Path `i` from the `j`-th start uses stream `i` of a ChaCha8 generator
/// seeded with `seed + j`.
pub fn feynman_kac_mc(
    op: &DiscreteOperator,
    kappa: &KatoMeasure,
    f: &[f64],
    cfg: &FkConfig,
    starts: &[usize],
) -> Result<Vec<McEstimate>> {
    if kappa.kind != MeasureKind::VolumeDensity {
        return Err(Error::InvalidArgument("Monte Carlo supports volume densities only".into()));
    }
    if cfg.paths == 0 || !(cfg.t > 0.0) {
        return Err(Error::InvalidArgument("need at least one path and t > 0".into()));
    }
    let chain = JumpChain::new(op)?;
    let k = op.restrict_vector(&kappa.values);
    let fl = op.restrict_vector(f);
    let mut out = Vec::with_capacity(starts.len());
    for (j, &x) in starts.iter().enumerate() {
        let lx = op
            .local_index(x)
            .ok_or_else(|| Error::InvalidArgument(format!("start vertex {x} is not a free dof")))?;
        let values = par::map_indexed(cfg.paths, |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(j as u64));
            rng.set_stream(i as u64);
            chain.sample(lx, cfg.t, &k, &fl, &mut rng)
        });
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        out.push(McEstimate { vertex: x, mean, std_error: (var / n).sqrt() });
    }
    Ok(out)
}
