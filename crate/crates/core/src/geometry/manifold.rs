use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::maps::BiLipschitzMap;
use super::metric::{eigen_range, MetricField};
use crate::error::{Error, Result};
use crate::expr::ScalarExpr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    EuclideanBox,
    HalfSpaceBox,
    SphericallySymmetric,
    TwoChartCustom,
}

/// Checkerboard coefficient: the metric is multiplied by `contrast` on every
/// other cube of side `period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughCoefficient {
    pub contrast: f64,
    pub period: f64,
}

impl RoughCoefficient {
    pub fn factor(&self, z: &[f64]) -> f64 {
        let parity: i64 = z.iter().map(|x| (x / self.period).floor() as i64).sum();
        if parity.rem_euclid(2) == 1 {
            self.contrast
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondChartConfig {
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub metric: Option<Vec<Vec<f64>>>,
    /// Affine transition from the master chart: `z ↦ A z + c`.
    pub transition_matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub transition_offset: Option<Vec<f64>>,
}

/// The `[manifold]` table of a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub kind: ManifoldKind,
    pub d: usize,
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub metric: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub rough: Option<RoughCoefficient>,
    #[serde(default)]
    pub psi_table: Option<Vec<[f64; 2]>>,
    /// Alternative to `psi_table`: an expression in `r`, tabulated on
    /// `psi_samples` equal steps up to `psi_rmax`.
    #[serde(default)]
    pub psi_expr: Option<String>,
    #[serde(default)]
    pub psi_rmax: Option<f64>,
    #[serde(default)]
    pub psi_samples: Option<usize>,
    #[serde(default)]
    pub lip_psi: Option<f64>,
    #[serde(default)]
    pub inv_lip_psi: Option<f64>,
    #[serde(default)]
    pub cap_radius: Option<f64>,
    #[serde(default)]
    pub second_chart: Option<SecondChartConfig>,
}

/// Piecewise-linear radial profile `ψ` of a spherically symmetric metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiProfile {
    r: Vec<f64>,
    psi: Vec<f64>,
    lip: f64,
    inv_lip: Option<f64>,
}

impl PsiProfile {
    pub fn new(table: &[[f64; 2]], lip: Option<f64>, inv_lip: Option<f64>) -> Result<Self> {
        let lip = lip.ok_or_else(|| Error::Config("spherically symmetric profile needs lip_psi".into()))?;
        if table.len() < 2 {
            return Err(Error::Config("psi_table needs at least two rows".into()));
        }
        if table[0] != [0.0, 0.0] {
            return Err(Error::Config(format!("psi_table must start at [0, 0], found {:?}", table[0])));
        }
        let mut r = Vec::with_capacity(table.len());
        let mut psi = Vec::with_capacity(table.len());
        for (k, row) in table.iter().enumerate() {
            if k > 0 {
                if !(row[0] > table[k - 1][0]) {
                    return Err(Error::Config(format!("psi_table radii not strictly increasing at row {k}")));
                }
                if !(row[1] > 0.0) {
                    return Err(Error::Config(format!("psi must be positive away from 0, row {k} has {}", row[1])));
                }
            }
            r.push(row[0]);
            psi.push(row[1]);
        }
        let slack = 1e-9 * lip.max(1.0);
        for k in 1..r.len() {
            let slope = (psi[k] - psi[k - 1]) / (r[k] - r[k - 1]);
            if slope.abs() > lip + slack {
                return Err(Error::Config(format!(
                    "psi slope {slope} on [{}, {}] exceeds lip_psi = {lip}",
                    r[k - 1],
                    r[k]
                )));
            }
            if let Some(il) = inv_lip {
                if slope < 1.0 / il - slack {
                    return Err(Error::Config(format!(
                        "psi slope {slope} on [{}, {}] is below 1/inv_lip_psi",
                        r[k - 1],
                        r[k]
                    )));
                }
            }
        }
        Ok(Self { r, psi, lip, inv_lip })
    }

    /// Tabulates `f` on `n` equal steps of `[0, r_max]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, r_max: f64, n: usize, lip: f64, inv_lip: Option<f64>) -> Result<Self> {
        let table: Vec<[f64; 2]> = (0..=n)
            .map(|k| {
                let r = r_max * k as f64 / n as f64;
                [r, if k == 0 { 0.0 } else { f(r) }]
            })
            .collect();
        Self::new(&table, Some(lip), inv_lip)
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn inv_lip(&self) -> Option<f64> {
        self.inv_lip
    }

    pub fn table(&self) -> Vec<[f64; 2]> {
        self.r.iter().zip(&self.psi).map(|(&r, &p)| [r, p]).collect()
    }

    fn segment(&self, r: f64) -> usize {
        match self.r.partition_point(|&x| x <= r) {
            0 => 0,
            k if k >= self.r.len() => self.r.len() - 2,
            k => k - 1,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let k = self.segment(r);
        let s = (r - self.r[k]) / (self.r[k + 1] - self.r[k]);
        self.psi[k] + s * (self.psi[k + 1] - self.psi[k])
    }

    pub fn slope_at(&self, r: f64) -> f64 {
        let k = self.segment(r);
        (self.psi[k + 1] - self.psi[k]) / (self.r[k + 1] - self.r[k])
    }

    /// `∫₀^r ψ(s)^{d-1} ds`, Simpson on each linear piece (exact for d ≤ 3).
    pub fn radial_integral(&self, r: f64, d: usize) -> f64 {
        let p = |s: f64| self.eval(s).powi(d as i32 - 1);
        let mut total = 0.0;
        let mut a = 0.0;
        for &b in self.r.iter().skip(1) {
            let hi = b.min(r);
            if hi > a {
                total += (hi - a) / 6.0 * (p(a) + 4.0 * p(0.5 * (a + hi)) + p(hi));
            }
            if b >= r {
                break;
            }
            a = b;
        }
        total
    }
}

/// Axis-aligned chart image; with `half_space` the lower face of the last
/// axis belongs to the manifold boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub half_space: bool,
}

impl ChartBox {
    pub fn new(bounds: &[[f64; 2]], half_space: bool) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        for (k, b) in bounds.iter().enumerate() {
            if !(b[0].is_finite() && b[1].is_finite() && b[0] < b[1]) {
                return Err(Error::Config(format!("bounds on axis {k} must be finite with lower < upper")));
            }
        }
        if half_space && bounds.last().unwrap()[0] != 0.0 {
            return Err(Error::Config("half_space_box needs the last axis to start at 0".into()));
        }
        Ok(Self {
            lower: bounds.iter().map(|b| b[0]).collect(),
            upper: bounds.iter().map(|b| b[1]).collect(),
            half_space,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        let tol = 1e-12;
        z.len() == self.dim()
            && z.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= lo - tol * lo.abs().max(1.0) && *x <= hi + tol * hi.abs().max(1.0))
    }

    pub fn min_side(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min)
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| (0..d).map(|k| if mask >> k & 1 == 1 { self.upper[k] } else { self.lower[k] }).collect())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub id: usize,
    pub image: ChartBox,
    pub metric: MetricField,
}

/// Transition from `source` chart coordinates to `target` chart coordinates.
#[derive(Debug, Clone)]
pub struct Transition {
    pub source: usize,
    pub target: usize,
    pub map: BiLipschitzMap,
}

/// A Lipschitz Riemannian manifold given by at most two charts.
///
/// Chart 0 is the master chart; meshes are built on it.
#[derive(Debug, Clone)]
pub struct Manifold {
    dim: usize,
    kind: ManifoldKind,
    charts: Vec<Chart>,
    transitions: Vec<Transition>,
    boundary: bool,
    profile: Option<PsiProfile>,
}

impl Manifold {
    /// `bounds` box with a constant metric (identity when `None`).
    pub fn euclidean_box(bounds: &[[f64; 2]], metric: Option<DMatrix<f64>>) -> Result<Self> {
        Self::flat(ManifoldKind::EuclideanBox, bounds, metric, None)
    }

    /// `ℝ^{d-1} × [0, ∞)` truncated to `bounds`; the last axis must start at 0.
    pub fn half_space_box(bounds: &[[f64; 2]], metric: Option<DMatrix<f64>>) -> Result<Self> {
        Self::flat(ManifoldKind::HalfSpaceBox, bounds, metric, None)
    }

    pub fn with_rough_coefficient(mut self, rough: RoughCoefficient) -> Result<Self> {
        if !(rough.contrast > 0.0 && rough.period > 0.0) {
            return Err(Error::Config("rough coefficient needs positive contrast and period".into()));
        }
        let g = self.charts[0].metric.scaled_by(move |z| rough.factor(z));
        self.charts[0].metric = g;
        Ok(self)
    }

    fn flat(
        kind: ManifoldKind,
        bounds: &[[f64; 2]],
        metric: Option<DMatrix<f64>>,
        second: Option<(ChartBox, MetricField, BiLipschitzMap)>,
    ) -> Result<Self> {
        let half = kind == ManifoldKind::HalfSpaceBox;
        let image = ChartBox::new(bounds, half)?;
        let d = image.dim();
        let g = match metric {
            Some(m) => {
                if m.nrows() != d || m.ncols() != d {
                    return Err(Error::Config(format!("metric must be {d}x{d}")));
                }
                let field = MetricField::constant(m);
                field.check_at(&image.lower)?;
                field
            }
            None => MetricField::identity(d),
        };
        let mut charts = vec![Chart { id: 0, image, metric: g }];
        let mut transitions = Vec::new();
        if let Some((image1, g1, t)) = second {
            let (g0, t1, img1, g1c) = (charts[0].metric.clone(), t.clone(), image1.clone(), g1.clone());
            charts[0].metric = MetricField::new(d, move |z| {
                let w = t1.apply(z);
                if img1.contains(&w) {
                    let j = t1.jacobian(z);
                    let p = j.transpose() * g1c.eval(&w) * &j;
                    (&p + p.transpose()) * 0.5
                } else {
                    g0.eval(z)
                }
            });
            charts.push(Chart { id: 1, image: image1, metric: g1 });
            transitions.push(Transition { source: 0, target: 1, map: t });
        }
        Ok(Self { dim: d, kind, charts, transitions, boundary: half, profile: None })
    }

    /// Spherically symmetric metric `dr² + ψ(r)² dθ²`, written in Cartesian
    /// coordinates on the master chart. Inside `cap_radius` the metric is
    /// replaced by `ψ'(0)²` times the flat metric.
    pub fn spherically_symmetric(bounds: &[[f64; 2]], profile: PsiProfile, cap_radius: f64) -> Result<Self> {
        let image = ChartBox::new(bounds, false)?;
        let d = image.dim();
        let reach = image
            .corners()
            .iter()
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if reach > profile.r_max() * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "psi_table ends at r = {} but the chart box reaches r = {reach}",
                profile.r_max()
            )));
        }
        if !(cap_radius > 0.0) {
            return Err(Error::Config("cap_radius must be positive".into()));
        }
        let psi = profile.clone();
        let slope0 = profile.slope_at(0.0);
        let cartesian = MetricField::new(d, move |z| {
            let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r < cap_radius {
                return DMatrix::identity(d, d) * (slope0 * slope0);
            }
            let u = nalgebra::DVector::from_iterator(d, z.iter().map(|x| x / r));
            let p = &u * u.transpose();
            let s = psi.eval(r) / r;
            &p + (DMatrix::identity(d, d) - &p) * (s * s)
        });
        let mut charts = vec![Chart { id: 0, image, metric: cartesian }];
        let mut transitions = Vec::new();
        if d == 2 || d == 3 {
            let (polar_box, polar_metric, map) = polar_chart(d, &profile);
            charts.push(Chart { id: 1, image: polar_box, metric: polar_metric });
            transitions.push(Transition { source: 0, target: 1, map });
        }
        Ok(Self {
            dim: d,
            kind: ManifoldKind::SphericallySymmetric,
            charts,
            transitions,
            boundary: false,
            profile: Some(profile),
        })
    }

    /// Master box with a constant metric and a second box chart whose metric
    /// takes over wherever the affine transition lands inside it.
    pub fn two_chart(
        bounds: &[[f64; 2]],
        metric: Option<DMatrix<f64>>,
        second_bounds: &[[f64; 2]],
        second_metric: Option<DMatrix<f64>>,
        transition: BiLipschitzMap,
    ) -> Result<Self> {
        let image1 = ChartBox::new(second_bounds, false)?;
        let d = image1.dim();
        if d != bounds.len() || transition.dim() != d {
            return Err(Error::Config("second chart dimension differs from the master chart".into()));
        }
        let g1 = match second_metric {
            Some(m) => MetricField::constant(m),
            None => MetricField::identity(d),
        };
        g1.check_at(&image1.lower)?;
        Self::flat(ManifoldKind::TwoChartCustom, bounds, metric, Some((image1, g1, transition)))
    }

    pub fn from_config(cfg: &ManifoldConfig, default_cap: f64) -> Result<Self> {
        if cfg.d < 1 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if cfg.bounds.len() != cfg.d {
            return Err(Error::Config(format!("expected {} bounds, found {}", cfg.d, cfg.bounds.len())));
        }
        let metric = cfg.metric.as_ref().map(|m| matrix_from_rows(m, cfg.d)).transpose()?;
        let m = match cfg.kind {
            ManifoldKind::EuclideanBox => Self::euclidean_box(&cfg.bounds, metric)?,
            ManifoldKind::HalfSpaceBox => Self::half_space_box(&cfg.bounds, metric)?,
            ManifoldKind::SphericallySymmetric => {
                let profile = match (&cfg.psi_table, &cfg.psi_expr) {
                    (Some(t), None) => PsiProfile::new(t, cfg.lip_psi, cfg.inv_lip_psi)?,
                    (None, Some(e)) => {
                        let f = ScalarExpr::parse(e)?;
                        let r_max = cfg.psi_rmax.ok_or_else(|| Error::Config("psi_expr needs psi_rmax".into()))?;
                        let n = cfg.psi_samples.unwrap_or(512);
                        let lip = cfg.lip_psi.ok_or_else(|| Error::Config("spherically symmetric profile needs lip_psi".into()))?;
                        let mut table = vec![[0.0, 0.0]];
                        for k in 1..=n {
                            let r = r_max * k as f64 / n as f64;
                            table.push([r, f.eval_radial(r)?]);
                        }
                        PsiProfile::new(&table, Some(lip), cfg.inv_lip_psi)?
                    }
                    _ => return Err(Error::Config("give exactly one of psi_table and psi_expr".into())),
                };
                Self::spherically_symmetric(&cfg.bounds, profile, cfg.cap_radius.unwrap_or(default_cap))?
            }
            ManifoldKind::TwoChartCustom => {
                let sc = cfg
                    .second_chart
                    .as_ref()
                    .ok_or_else(|| Error::Config("two_chart_custom needs [manifold.second_chart]".into()))?;
                let a = matrix_from_rows(&sc.transition_matrix, cfg.d)?;
                let c = sc.transition_offset.clone().unwrap_or_else(|| vec![0.0; cfg.d]);
                let t = BiLipschitzMap::affine(a, c)?;
                let m1 = sc.metric.as_ref().map(|m| matrix_from_rows(m, cfg.d)).transpose()?;
                Self::two_chart(&cfg.bounds, metric, &sc.bounds, m1, t)?
            }
        };
        match cfg.rough {
            Some(r) => m.with_rough_coefficient(r),
            None => Ok(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, id: usize) -> Option<&Chart> {
        self.charts.iter().find(|c| c.id == id)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn master(&self) -> &Chart {
        &self.charts[0]
    }

    pub fn metric(&self) -> &MetricField {
        &self.charts[0].metric
    }

    pub fn profile(&self) -> Option<&PsiProfile> {
        self.profile.as_ref()
    }
}

fn polar_chart(d: usize, profile: &PsiProfile) -> (ChartBox, MetricField, BiLipschitzMap) {
    use std::f64::consts::PI;
    let r_max = profile.r_max();
    let psi = profile.clone();
    if d == 2 {
        let image = ChartBox::new(&[[0.0, r_max], [-PI, PI]], false).unwrap();
        let g = MetricField::new(2, move |p| {
            let s = psi.eval(p[0]);
            DMatrix::from_diagonal(&nalgebra::dvector![1.0, s * s])
        });
        (image, g, BiLipschitzMap::polar_to_cartesian(0.0, r_max).inverse())
    } else {
        let image = ChartBox::new(&[[0.0, r_max], [0.0, PI], [-PI, PI]], false).unwrap();
        let g = MetricField::new(3, move |p| {
            let s = psi.eval(p[0]);
            let st = p[1].sin();
            DMatrix::from_diagonal(&nalgebra::dvector![1.0, s * s, s * s * st * st])
        });
        let map = BiLipschitzMap::new(
            3,
            |x| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                vec![r, (x[2] / r).clamp(-1.0, 1.0).acos(), x[1].atan2(x[0])]
            },
            |p| {
                let (st, ct) = p[1].sin_cos();
                let (sp, cp) = p[2].sin_cos();
                vec![p[0] * st * cp, p[0] * st * sp, p[0] * ct]
            },
            f64::INFINITY,
            r_max.max(1.0),
        );
        (image, g, map)
    }
}

/// Parses a `d × d` matrix given as rows.
pub fn matrix_from_rows(rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Config(format!("expected a {d}x{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

/// Extreme metric eigenvalues over sample points of a chart.
pub fn metric_eigen_bounds(m: &Manifold, chart: usize, samples: &[Vec<f64>]) -> Result<(f64, f64)> {
    let c = m
        .chart(chart)
        .ok_or_else(|| Error::InvalidArgument(format!("no chart with id {chart}")))?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for z in samples {
        if !c.image.contains(z) {
            return Err(Error::OutsideChart { chart, point: z.clone() });
        }
        let g = c.metric.check_at(z)?;
        let (a, b) = eigen_range(&g).ok_or(Error::NotPositiveDefinite { point: z.clone() })?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    Ok((lo, hi))
}
