use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::metric::MetricField;
use crate::error::{Error, Result};

type PointMap = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type JacobianMap = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

const FD_STEP: f64 = 1e-6;

/// A bi-Lipschitz homeomorphism between chart domains.
#[derive(Clone)]
pub struct BiLipschitzMap {
    dim: usize,
    forward: Arc<PointMap>,
    inverse: Arc<PointMap>,
    jacobian: Option<Arc<JacobianMap>>,
    inverse_jacobian: Option<Arc<JacobianMap>>,
    lip_fwd: f64,
    lip_inv: f64,
}

impl fmt::Debug for BiLipschitzMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BiLipschitzMap")
            .field("dim", &self.dim)
            .field("lip_fwd", &self.lip_fwd)
            .field("lip_inv", &self.lip_inv)
            .finish_non_exhaustive()
    }
}

impl BiLipschitzMap {
    pub fn new<F, G>(dim: usize, forward: F, inverse: G, lip_fwd: f64, lip_inv: f64) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            jacobian: None,
            inverse_jacobian: None,
            lip_fwd,
            lip_inv,
        }
    }

    /// Supplies analytic Jacobians instead of finite differences.
    pub fn with_jacobians<J, K>(mut self, jac: J, inv_jac: K) -> Self
    where
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        K: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jac));
        self.inverse_jacobian = Some(Arc::new(inv_jac));
        self
    }

    pub fn identity(dim: usize) -> Self {
        Self::affine(DMatrix::identity(dim, dim), vec![0.0; dim]).expect("identity is invertible")
    }

    /// `z ↦ A z + c`.
    pub fn affine(a: DMatrix<f64>, offset: Vec<f64>) -> Result<Self> {
        let dim = a.nrows();
        if a.ncols() != dim || offset.len() != dim {
            return Err(Error::InvalidArgument("affine map needs a square matrix and matching offset".into()));
        }
        let ai = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("affine map is singular".into()))?;
        let sv = a.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let (a1, c1) = (a.clone(), offset.clone());
        let (ai1, c2) = (ai.clone(), offset);
        let (aj, aij) = (a, ai);
        Ok(Self::new(
            dim,
            move |z| {
                let v = &a1 * nalgebra::DVector::from_column_slice(z);
                v.iter().zip(&c1).map(|(x, c)| x + c).collect()
            },
            move |w| {
                let shifted: Vec<f64> = w.iter().zip(&c2).map(|(x, c)| x - c).collect();
                (&ai1 * nalgebra::DVector::from_vec(shifted)).iter().copied().collect()
            },
            smax,
            1.0 / smin,
        )
        .with_jacobians(move |_| aj.clone(), move |_| aij.clone()))
    }

    pub fn scaling(dim: usize, c: f64) -> Result<Self> {
        Self::affine(DMatrix::identity(dim, dim) * c, vec![0.0; dim])
    }

    /// Polar coordinates `(r, θ)` to Cartesian `(x, y)` on an annulus `r ∈ [r_min, r_max]`.
    pub fn polar_to_cartesian(r_min: f64, r_max: f64) -> Self {
        Self::new(
            2,
            |p| vec![p[0] * p[1].cos(), p[0] * p[1].sin()],
            |x| vec![x[0].hypot(x[1]), x[1].atan2(x[0])],
            r_max.max(1.0),
            (1.0 / r_min).max(1.0),
        )
        .with_jacobians(
            |p| {
                let (s, c) = p[1].sin_cos();
                DMatrix::from_row_slice(2, 2, &[c, -p[0] * s, s, p[0] * c])
            },
            |x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let r = r2.sqrt();
                DMatrix::from_row_slice(2, 2, &[x[0] / r, x[1] / r, -x[1] / r2, x[0] / r2])
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lip_fwd(&self) -> f64 {
        self.lip_fwd
    }

    pub fn lip_inv(&self) -> f64 {
        self.lip_inv
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        (self.forward)(z)
    }

    pub fn apply_inverse(&self, w: &[f64]) -> Vec<f64> {
        (self.inverse)(w)
    }

    pub fn inverse(&self) -> Self {
        Self {
            dim: self.dim,
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
            jacobian: self.inverse_jacobian.clone(),
            inverse_jacobian: self.jacobian.clone(),
            lip_fwd: self.lip_inv,
            lip_inv: self.lip_fwd,
        }
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &Self) -> Self {
        let (f, g) = (self.clone(), inner.clone());
        let (fi, gi) = (self.clone(), inner.clone());
        let (fj, gj) = (self.clone(), inner.clone());
        let (fk, gk) = (self.clone(), inner.clone());
        Self::new(
            self.dim,
            move |z| f.apply(&g.apply(z)),
            move |w| gi.apply_inverse(&fi.apply_inverse(w)),
            self.lip_fwd * inner.lip_fwd,
            self.lip_inv * inner.lip_inv,
        )
        .with_jacobians(
            move |z| fj.jacobian(&gj.apply(z)) * gj.jacobian(z),
            move |w| {
                let u = fk.apply_inverse(w);
                gk.inverse().jacobian(&u) * fk.inverse().jacobian(w)
            },
        )
    }

    /// Analytic Jacobian if supplied, central differences otherwise.
    pub fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        if let Some(j) = &self.jacobian {
            return j(z);
        }
        let d = self.dim;
        let mut jac = DMatrix::zeros(d, d);
        let mut zp = z.to_vec();
        for k in 0..d {
            let step = FD_STEP * z[k].abs().max(1.0);
            zp[k] = z[k] + step;
            let fp = self.apply(&zp);
            zp[k] = z[k] - step;
            let fm = self.apply(&zp);
            zp[k] = z[k];
            for i in 0..d {
                jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * step);
            }
        }
        jac
    }

    /// Largest `|F⁻¹(F(z)) − z|` over the samples.
    pub fn round_trip_error(&self, samples: &[Vec<f64>]) -> f64 {
        samples
            .iter()
            .map(|z| {
                let back = self.apply_inverse(&self.apply(z));
                back.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// The field `z ↦ J_F(z)ᵀ · target(F(z)) · J_F(z)`.
///
/// The Jacobian rank is checked at every sample.
pub fn pullback_metric(f: &BiLipschitzMap, target: &MetricField, samples: &[Vec<f64>]) -> Result<MetricField> {
    if f.dim() != target.dim() {
        return Err(Error::InvalidArgument("map and metric dimensions differ".into()));
    }
    for z in samples {
        let j = f.jacobian(z);
        let sv = j.singular_values();
        if !(sv.min() > 1e-12 * sv.max().max(1.0)) {
            return Err(Error::RankDeficient { point: z.clone() });
        }
    }
    let (f, target) = (f.clone(), target.clone());
    Ok(MetricField::new(f.dim(), move |z| {
        let j = f.jacobian(z);
        let g = target.eval(&f.apply(z));
        let p = j.transpose() * g * &j;
        (&p + p.transpose()) * 0.5
    }))
}
