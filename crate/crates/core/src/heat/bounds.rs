use super::kernel::KernelSet;
use crate::error::{Error, Result};
use crate::spectral::RadiusField;

/// Relative floor below which kernel samples are ignored by the Gaussian check.
pub const GAUSSIAN_NOISE_FLOOR: f64 = 1e-8;

fn source_radius(rf: &RadiusField, x: usize) -> Result<f64> {
    rf.r_at(x)
        .ok_or_else(|| Error::InvalidArgument(format!("source {x} has no radius sample (cutoff vertex?)")))
}

fn column_sup(col: &[f64]) -> f64 {
    col.iter().copied().fold(0.0, f64::max)
}

/// `sup_y p(t, x, y)` and its scaled value for one `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeRow {
    pub source: usize,
    pub t: f64,
    pub r: f64,
    pub sup_p: f64,
    /// `sup_y p · min{t, R²}^{d/2}`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledReport {
    pub c_fit: f64,
    pub rows: Vec<EnvelopeRow>,
}

/// `C_fit = max p(t,x,y)·min{t, R²(x)}^{d/2}` over all samples.
pub fn verify_decoupled_bound(set: &KernelSet, rf: &RadiusField) -> Result<DecoupledReport> {
    let half_d = set.dim as f64 / 2.0;
    let mut rows = Vec::new();
    let mut c_fit: f64 = 0.0;
    for g in &set.grids {
        let r = source_radius(rf, g.source)?;
        for (t, col) in g.times.iter().zip(&g.columns) {
            let sup_p = column_sup(col);
            let scaled = sup_p * t.min(r * r).powf(half_d);
            c_fit = c_fit.max(scaled);
            rows.push(EnvelopeRow { source: g.source, t: *t, r, sup_p, scaled });
        }
    }
    Ok(DecoupledReport { c_fit, rows })
}

/// `Ξ = R^{-d}` on the radius-field vertices with the time factor
/// `Σ(t) = 1 + (ε₁/ε₂)^d t^{-d/2}` and a fitted constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPair {
    pub dim: usize,
    pub b: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub vertices: Vec<usize>,
    pub xi: Vec<f64>,
    pub c_fit: f64,
}

impl ControlPair {
    pub fn sigma(&self, t: f64) -> f64 {
        1.0 + (self.eps1 / self.eps2).powi(self.dim as i32) * t.powf(-(self.dim as f64) / 2.0)
    }

    pub fn xi_at(&self, vertex: usize) -> Option<f64> {
        self.vertices.binary_search(&vertex).ok().map(|k| self.xi[k])
    }

    /// `∫₀^∞ Σ^{1/p}(t) e^{-Ct} dt < ∞`, i.e. `d/(2p) < 1`.
    pub fn p_integrable(&self, p: f64) -> bool {
        p_integrable(self.dim, p)
    }

    /// `p(t, x, y) / (Σ(t) Ξ(x))`.
    pub fn ratio(&self, p: f64, t: f64, x: usize) -> Option<f64> {
        self.xi_at(x).map(|xi| p / (self.sigma(t) * xi))
    }
}

pub fn p_integrable(d: usize, p: f64) -> bool {
    p > 0.0 && (d as f64) / (2.0 * p) < 1.0
}

/// Fits `C` in `p ≤ C Σ Ξ` on the samples `(grid, time index)` accepted by `fit`.
pub fn control_pair(
    set: &KernelSet,
    rf: &RadiusField,
    fit: impl Fn(usize, usize) -> bool,
) -> Result<ControlPair> {
    let d = set.dim as i32;
    let xi: Vec<f64> = rf.r.iter().map(|r| r.powi(-d)).collect();
    let mut cp = ControlPair {
        dim: set.dim,
        b: rf.b,
        eps1: rf.eps1,
        eps2: rf.eps2,
        vertices: rf.vertices.clone(),
        xi,
        c_fit: 0.0,
    };
    let mut c: f64 = 0.0;
    let mut used = 0;
    for (gi, g) in set.grids.iter().enumerate() {
        source_radius(rf, g.source)?;
        for (k, (t, col)) in g.times.iter().zip(&g.columns).enumerate() {
            if fit(gi, k) {
                c = c.max(cp.ratio(column_sup(col), *t, g.source).unwrap());
                used += 1;
            }
        }
    }
    if used == 0 {
        return Err(Error::InvalidArgument("no samples selected for the control-pair fit".into()));
    }
    cp.c_fit = c;
    Ok(cp)
}

/// Even time indices; the odd ones are left for [`holdout_check`].
pub fn even_times(_grid: usize, k: usize) -> bool {
    k % 2 == 0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldoutReport {
    pub samples: usize,
    /// Largest `p / (C Σ Ξ)` seen.
    pub max_ratio: f64,
    pub violations: usize,
}

/// Re-checks `p ≤ (1 + slack) C Σ Ξ` on the samples accepted by `select`.
pub fn holdout_check(
    cp: &ControlPair,
    set: &KernelSet,
    select: impl Fn(usize, usize) -> bool,
    slack: f64,
) -> Result<HoldoutReport> {
    let mut rep = HoldoutReport { samples: 0, max_ratio: 0.0, violations: 0 };
    for (gi, g) in set.grids.iter().enumerate() {
        for (k, (t, col)) in g.times.iter().zip(&g.columns).enumerate() {
            if !select(gi, k) {
                continue;
            }
            let r = cp
                .ratio(column_sup(col), *t, g.source)
                .ok_or_else(|| Error::InvalidArgument(format!("source {} has no Ξ value", g.source)))?
                / cp.c_fit;
            rep.samples += 1;
            rep.max_ratio = rep.max_ratio.max(r);
            if r > 1.0 + slack {
                rep.violations += 1;
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianReport {
    pub sup_ratio: f64,
    pub samples: usize,
    /// Samples dropped by the noise floor.
    pub floored: usize,
}

/// `sup p(t,x,y)·vol[B₁(x)]·t^{d/2}·exp[d²(x,y)/((4+ε)t)]` with `λ = 0`.
///
/// Samples with `p < floor · sup_y p(t,x,·)` are skipped.
pub fn gaussian_bound_check(set: &KernelSet, eps: f64, floor: f64) -> Result<GaussianReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let half_d = set.dim as f64 / 2.0;
    let mut rep = GaussianReport { sup_ratio: 0.0, samples: 0, floored: 0 };
    for (gi, g) in set.grids.iter().enumerate() {
        let vb = set.ball_volume(gi, 1.0);
        let dist = &set.distances[gi];
        for (t, col) in g.times.iter().zip(&g.columns) {
            let cut = floor * column_sup(col);
            let pre = vb * t.powf(half_d);
            for (y, &p) in col.iter().enumerate() {
                if p <= 0.0 || !dist[y].is_finite() {
                    continue;
                }
                if p < cut {
                    rep.floored += 1;
                    continue;
                }
                rep.samples += 1;
                let r = p * pre * (dist[y] * dist[y] / ((4.0 + eps) * t)).exp();
                rep.sup_ratio = rep.sup_ratio.max(r);
            }
        }
    }
    Ok(rep)
}

/// `∫ p(t, x, ·) dvol` at every grid time, per source.
pub fn conservativeness_check(set: &KernelSet) -> Vec<Vec<f64>> {
    set.grids.iter().map(|g| g.mass_profile(&set.mass)).collect()
}
