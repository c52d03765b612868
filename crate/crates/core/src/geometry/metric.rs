use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

type Evaluator = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A measurable field of symmetric positive definite matrices on a chart.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    eval: Arc<Evaluator>,
    declared_ellipticity: Option<f64>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("dim", &self.dim)
            .field("declared_ellipticity", &self.declared_ellipticity)
            .finish_non_exhaustive()
    }
}

impl MetricField {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self { dim, eval: Arc::new(f), declared_ellipticity: None }
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(DMatrix::identity(dim, dim)).with_ellipticity(1.0)
    }

    pub fn constant(g: DMatrix<f64>) -> Self {
        let dim = g.nrows();
        let field = Self::new(dim, move |_| g.clone());
        match eigen_range(&field.eval(&vec![0.0; dim])) {
            Some((lo, hi)) if lo > 0.0 => field.with_ellipticity(hi.max(1.0 / lo)),
            _ => field,
        }
    }

    /// `c(z)·g(z)`, with `c` a positive scalar field.
    pub fn scaled_by<F>(&self, c: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let inner = self.clone();
        Self::new(self.dim, move |z| inner.eval(z) * c(z))
    }

    pub fn with_ellipticity(mut self, lambda: f64) -> Self {
        self.declared_ellipticity = Some(lambda);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn declared_ellipticity(&self) -> Option<f64> {
        self.declared_ellipticity
    }

    pub fn eval(&self, z: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(z.len(), self.dim);
        (self.eval)(z)
    }

    /// `g(z)(v, v)`.
    pub fn norm_sq(&self, z: &[f64], v: &[f64]) -> f64 {
        let g = self.eval(z);
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += g[(i, j)] * v[i] * v[j];
            }
        }
        s
    }

    /// Checks symmetry, positive definiteness and the declared ellipticity at `z`.
    pub fn check_at(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.eval(z);
        let scale = g.amax().max(1.0);
        let asym = (&g - g.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::NotPositiveDefinite { point: z.to_vec() });
        }
        let (lo, hi) = eigen_range(&g).ok_or(Error::NotPositiveDefinite { point: z.to_vec() })?;
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite { point: z.to_vec() });
        }
        if let Some(l) = self.declared_ellipticity {
            let slack = 1e-9 * l;
            if lo < 1.0 / l - slack || hi > l + slack {
                return Err(Error::InvalidArgument(format!(
                    "metric eigenvalues [{lo}, {hi}] at {z:?} violate the declared ellipticity {l}"
                )));
            }
        }
        Ok(g)
    }
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_range(g: &DMatrix<f64>) -> Option<(f64, f64)> {
    if !g.iter().all(|x| x.is_finite()) {
        return None;
    }
    let ev = SymmetricEigen::new(g.clone()).eigenvalues;
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

/// Symmetric square root of an SPD matrix.
pub fn spd_sqrt(g: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(g.clone());
    let s = e.eigenvalues.map(|x| x.max(0.0).sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&s) * e.eigenvectors.transpose()
}

/// Eigenvalues of the pencil `(h, g)`, i.e. of `L⁻¹ h L⁻ᵀ` with `g = L Lᵀ`.
pub fn generalized_eigen_range(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Option<(f64, f64)> {
    let l = Cholesky::new(g.clone())?.l();
    let li = l.try_inverse()?;
    let m = &li * h * li.transpose();
    let m = (&m + m.transpose()) * 0.5;
    eigen_range(&m)
}

/// Smallest `C ≥ 1` with `C⁻¹ g ≼ h ≼ C g` at every sample.
pub fn quasi_isometry_constant(g: &MetricField, h: &MetricField, samples: &[Vec<f64>]) -> Result<f64> {
    if g.dim() != h.dim() {
        return Err(Error::InvalidArgument("metric fields of different dimension".into()));
    }
    let mut c: f64 = 1.0;
    for z in samples {
        let gz = g.check_at(z)?;
        let hz = h.check_at(z)?;
        let (lo, hi) =
            generalized_eigen_range(&hz, &gz).ok_or(Error::NotPositiveDefinite { point: z.clone() })?;
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite { point: z.clone() });
        }
        c = c.max(hi).max(1.0 / lo);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_records_ellipticity() {
        let g = MetricField::constant(DMatrix::from_diagonal(&nalgebra::dvector![2.0, 0.5]));
        assert_eq!(g.declared_ellipticity(), Some(2.0));
        assert!(g.check_at(&[0.3, 0.1]).is_ok());
    }

    #[test]
    fn indefinite_sample_is_reported() {
        let g = MetricField::new(2, |z| DMatrix::from_diagonal(&nalgebra::dvector![1.0, z[0]]));
        assert!(g.check_at(&[1.0, 0.0]).is_ok());
        match g.check_at(&[-1.0, 0.0]) {
            Err(Error::NotPositiveDefinite { point }) => assert_eq!(point, vec![-1.0, 0.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let a = spd_sqrt(&g);
        assert!((&a * &a - g).amax() < 1e-12);
    }

    #[test]
    fn quasi_isometry_of_diagonal() {
        let samples = vec![vec![0.0, 0.0], vec![0.5, 0.5]];
        let g = MetricField::identity(2);
        let h = MetricField::constant(DMatrix::from_diagonal(&nalgebra::dvector![2.0, 0.5]));
        let c = quasi_isometry_constant(&g, &h, &samples).unwrap();
        assert!((c - 2.0).abs() < 1e-12);
        let h3 = MetricField::constant(DMatrix::identity(2, 2) * 3.0);
        assert!((quasi_isometry_constant(&g, &h3, &samples).unwrap() - 3.0).abs() < 1e-12);
        assert!((quasi_isometry_constant(&g, &g, &samples).unwrap() - 1.0).abs() < 1e-12);
    }
}
