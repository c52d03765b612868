use super::measure::{facet_measure, facet_midpoint, KatoMeasure, MeasureKind};
use crate::error::{Error, Result};
use crate::femcore::{FacetKind, Mesh};
use crate::heat::{ControlPair, KernelSet};

/// Weighted sample of `|κ|` that pairs with a kernel column.
enum Weights {
    Vertex(Vec<f64>),
    Facet(Vec<(Vec<usize>, f64)>),
}

impl Weights {
    fn new(mesh: &Mesh, kappa: &KatoMeasure, set: &KernelSet) -> Result<Self> {
        Ok(match kappa.kind {
            MeasureKind::VolumeDensity => {
                if kappa.values.len() != set.mass.len() {
                    return Err(Error::InvalidArgument("measure and kernels live on different meshes".into()));
                }
                Weights::Vertex(kappa.values.iter().zip(&set.mass).map(|(k, m)| k.abs() * m).collect())
            }
            MeasureKind::SurfaceDensity => Weights::Facet(
                mesh.facets()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| kappa.values[*i] != 0.0)
                    .map(|(i, f)| (f.vertices.clone(), kappa.values[i].abs() * facet_measure(mesh, i)))
                    .collect(),
            ),
        })
    }

    /// `∫ p(s, x, ·) d|κ|`; on facets `p` is taken at the midpoint.
    fn pair(&self, col: &[f64]) -> f64 {
        match self {
            Weights::Vertex(w) => col.iter().zip(w).map(|(p, w)| p * w).sum(),
            Weights::Facet(fs) => fs
                .iter()
                .map(|(vs, w)| w * vs.iter().map(|&v| col[v]).sum::<f64>() / vs.len() as f64)
                .sum(),
        }
    }
}

/// `F(s) = ∫ p(s, x, ·) d|κ|` at every grid time, per source.
pub fn kato_profile(set: &KernelSet, mesh: &Mesh, kappa: &KatoMeasure) -> Result<Vec<Vec<f64>>> {
    let w = Weights::new(mesh, kappa, set)?;
    Ok(set.grids.iter().map(|g| g.columns.iter().map(|c| w.pair(c)).collect()).collect())
}

/// `∫₀^t F(s) ds` from samples of `F` on `times`: the first cell uses
/// `F(s) ≈ F(t₁)(t₁/s)^α`, the rest the trapezoid rule.
fn time_integral(times: &[f64], f: &[f64], t: f64, alpha: f64) -> Result<f64> {
    let t1 = times[0];
    if t < t1 * (1.0 - 1e-12) {
        return Err(Error::BelowTimeGrid { t, t_min: t1 });
    }
    let t_last = times[times.len() - 1];
    if t > t_last * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("time {t} beyond the grid end {t_last}")));
    }
    let head = |upto: f64| f[0] * t1.powf(alpha) * upto.powf(1.0 - alpha) / (1.0 - alpha);
    if t <= t1 {
        return Ok(head(t));
    }
    let mut total = head(t1);
    for k in 1..times.len() {
        let (a, b) = (times[k - 1], times[k]);
        if a >= t {
            break;
        }
        if b <= t {
            total += 0.5 * (b - a) * (f[k - 1] + f[k]);
        } else {
            let w = (t - a) / (b - a);
            let ft = (1.0 - w) * f[k - 1] + w * f[k];
            total += 0.5 * (t - a) * (f[k - 1] + ft);
        }
    }
    Ok(total)
}

/// `J(t) = max_x ∫₀^t ∫ p(s, x, ·) d|κ| ds` over the sources of `set`.
pub fn kato_integral(set: &KernelSet, mesh: &Mesh, kappa: &KatoMeasure, t: f64) -> Result<f64> {
    let alpha = kappa.small_time_exponent(mesh.dim());
    if !(alpha < 1.0) {
        return Err(Error::InadmissibleExponent { p: kappa.exponent.unwrap_or(f64::NAN), d: mesh.dim() });
    }
    let prof = kato_profile(set, mesh, kappa)?;
    let mut j: f64 = 0.0;
    for f in &prof {
        j = j.max(time_integral(set.times(), f, t, alpha)?);
    }
    Ok(j)
}

/// `J_σ(t)` for a density on the manifold boundary.
pub fn surface_kato(set: &KernelSet, mesh: &Mesh, l: &KatoMeasure, t: f64) -> Result<f64> {
    if !mesh.facets().iter().any(|f| f.kind == FacetKind::ManifoldBoundary) {
        return Err(Error::NoBoundary);
    }
    if l.kind != MeasureKind::SurfaceDensity {
        return Err(Error::InvalidArgument("surface_kato needs a surface density".into()));
    }
    for (i, f) in mesh.facets().iter().enumerate() {
        if f.kind == FacetKind::ArtificialCutoff && l.values[i] != 0.0 {
            return Err(Error::CutoffFacet { facet: i });
        }
    }
    kato_integral(set, mesh, l, t)
}

/// `p > d/2` for `d ≥ 2`, `p ≥ 1` for `d = 1`.
pub fn admissible_exponent(d: usize, p: f64) -> bool {
    if d == 1 {
        p >= 1.0
    } else {
        p > d as f64 / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionRow {
    pub source: usize,
    pub s: f64,
    /// `∫ p(s, x, ·) |k| dvol`.
    pub lhs: f64,
    /// `(∫ p(s, x, ·) |k₁|^p dvol)^{1/p} + ‖k₂‖_∞`.
    pub hoelder: f64,
    /// `(C Σ(s))^{1/p} ‖k₁‖_{L^p(Ξ vol)} + ‖k₂‖_∞`.
    pub rhs: f64,
}

impl CriterionRow {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub p: f64,
    pub norm_k1: f64,
    pub norm_k2: f64,
    pub rows: Vec<CriterionRow>,
    pub min_slack: f64,
}

/// Checks `∫p(s,x,·)|k| dvol ≤ (C Σ(s))^{1/p}‖k₁‖_{L^p(Ξ vol)} + ‖k₂‖_∞` at
/// every sampled `(s, x)`.
///
/// The weighted norm runs over the vertices carrying a `Ξ` value.
pub fn kato_criterion_check(set: &KernelSet, kappa: &KatoMeasure, cp: &ControlPair, p: f64) -> Result<CriterionReport> {
    if kappa.kind != MeasureKind::VolumeDensity {
        return Err(Error::InvalidArgument("the criterion is stated for volume densities".into()));
    }
    if !admissible_exponent(set.dim, p) {
        return Err(Error::InadmissibleExponent { p, d: set.dim });
    }
    if kappa.values.len() != set.mass.len() {
        return Err(Error::InvalidArgument("measure and kernels live on different meshes".into()));
    }
    let (k1, k2) = kappa.split();
    let norm_k2 = k2.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let norm_k1 = cp
        .vertices
        .iter()
        .zip(&cp.xi)
        .map(|(&v, xi)| k1[v].abs().powf(p) * xi * set.mass[v])
        .sum::<f64>()
        .powf(1.0 / p);
    let weight: Vec<f64> = kappa.values.iter().zip(&set.mass).map(|(k, m)| k.abs() * m).collect();
    let weight_p: Vec<f64> = k1.iter().zip(&set.mass).map(|(k, m)| k.abs().powf(p) * m).collect();
    let mut rows = Vec::new();
    for g in &set.grids {
        for (s, col) in g.times.iter().zip(&g.columns) {
            let lhs = col.iter().zip(&weight).map(|(a, b)| a * b).sum();
            let hoelder = col.iter().zip(&weight_p).map(|(a, b)| a * b).sum::<f64>().powf(1.0 / p) + norm_k2;
            let rhs = (cp.c_fit * cp.sigma(*s)).powf(1.0 / p) * norm_k1 + norm_k2;
            rows.push(CriterionRow { source: g.source, s: *s, lhs, hoelder, rhs });
        }
    }
    let min_slack = rows.iter().map(|r| r.slack()).fold(f64::INFINITY, f64::min);
    Ok(CriterionReport { p, norm_k1, norm_k2, rows, min_slack })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RieszProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// `q ≤ d - 1`: the criterion may fail.
    pub below_threshold: bool,
    /// `d = 2` uses `|log d|` in place of `d^{2-d}`.
    pub log_kernel: bool,
}

/// `sup_x Σ_{F ⊂ B_r(x)} k(d(x, F)) |l| σ(F)` with `k(s) = s^{2-d}`
/// (`|log s|` for `d = 2`). Distances are measured in the chart with the
/// metric frozen at `x`.
pub fn riesz_criterion(
    mesh: &Mesh,
    l: &KatoMeasure,
    q: f64,
    radii: &[f64],
    samples: &[usize],
) -> Result<RieszProfile> {
    let d = mesh.dim();
    if d < 2 {
        return Err(Error::InvalidArgument("the Riesz profile needs d >= 2".into()));
    }
    if l.kind != MeasureKind::SurfaceDensity {
        return Err(Error::InvalidArgument("the Riesz profile needs a surface density".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    let facets: Vec<(Vec<f64>, f64)> = (0..mesh.facets().len())
        .filter(|&i| l.values[i] != 0.0)
        .map(|i| (facet_midpoint(mesh, i), l.values[i].abs() * facet_measure(mesh, i)))
        .collect();
    let kernel = |s: f64| if d == 2 { s.ln().abs() } else { s.powi(2 - d as i32) };
    let mut values = vec![0.0_f64; radii.len()];
    for &x in samples {
        let px = mesh.vertex(x);
        let g = mesh.metric_field().eval(px);
        let mut near: Vec<(f64, f64)> = facets
            .iter()
            .map(|(mid, w)| {
                let v = nalgebra::DVector::from_iterator(d, mid.iter().zip(px).map(|(a, b)| a - b));
                ((v.transpose() * &g * &v)[(0, 0)].sqrt(), *w)
            })
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (val, &r) in values.iter_mut().zip(radii) {
            let s: f64 = near.iter().take_while(|(s, _)| *s < r).map(|(s, w)| kernel(*s) * w).sum();
            *val = val.max(s);
        }
    }
    Ok(RieszProfile { radii: radii.to_vec(), values, below_threshold: q <= (d - 1) as f64, log_kernel: d == 2 })
}
