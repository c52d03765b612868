use nalgebra::DMatrix;

use super::measure::KatoMeasure;
use crate::error::{Error, Result};
use crate::femcore::{DiscreteOperator, Mesh};
use crate::heat::{HeatScheme, Stepper};
use crate::spectral::lambda1;

/// Problems up to this size use a dense symmetric eigensolver.
const DENSE_LIMIT: usize = 1500;

/// Smallest `α ≥ 0` with `∫ f² d|κ| ≤ ρ E(f) + α ∫ f² dvol` for all discrete
/// `f`: the top generalised eigenvalue of `(Q − ρK/2, M)`, clamped at 0.
pub fn form_bound(op: &DiscreteOperator, mesh: &Mesh, kappa: &KatoMeasure, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let q = kappa.abs().lumped_on(mesh, op);
    let m = op.mass();
    let n = op.n_free();
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    let top = if n <= DENSE_LIMIT {
        let k = op.stiffness().to_dense();
        let b = DMatrix::from_fn(n, n, |i, j| {
            let qij = if i == j { q[i] } else { 0.0 };
            (qij - 0.5 * rho * k[(i, j)]) / (m[i] * m[j]).sqrt()
        });
        b.symmetric_eigenvalues().max()
    } else {
        // σ M − Q + ρK/2 is SPD for σ above max Q/M
        let ratio = q.iter().zip(m).map(|(a, w)| a / w).fold(0.0_f64, f64::max);
        let sigma = ratio * (1.0 + 1e-9) + 1e-12;
        let diag: Vec<f64> = q.iter().zip(m).map(|(a, w)| sigma * w - a).collect();
        let a = op.stiffness().scaled_plus_diag(0.5 * rho, 1.0, &diag);
        let shifted = op.with_stiffness(a)?;
        sigma - lambda1(&shifted)?.lambda1
    };
    Ok(top.max(0.0))
}

/// `e^{-tH} f₀` for `H = M⁻¹(½K + (q/2) Q_κ)` on the free dofs, `Q_κ` the
/// signed lumped measure.
///
/// The smallest per-vertex rate `c̄ = min q Q_v / m_v` is split off and
/// applied as the exact factor `e^{-c̄t/2}`; the remaining potential is
/// nonnegative, so every implicit step matrix is SPD.
pub fn schroedinger_evolve(
    op: &DiscreteOperator,
    mesh: &Mesh,
    kappa: &KatoMeasure,
    q: f64,
    f0: &[f64],
    t: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    if f0.len() != op.n_free() {
        return Err(Error::InvalidArgument("initial data does not match the free dofs".into()));
    }
    if !q.is_finite() {
        return Err(Error::NotSemibounded(format!("coupling q = {q}")));
    }
    let qk = kappa.lumped_on(mesh, op);
    let m = op.mass();
    let rate: Vec<f64> = qk.iter().zip(m).map(|(a, w)| q * a / w).collect();
    if rate.iter().any(|r| !r.is_finite()) {
        return Err(Error::NotSemibounded("potential has non-finite vertex values".into()));
    }
    let c_bar = rate.iter().copied().fold(f64::INFINITY, f64::min);
    let c_bar = if c_bar.is_finite() { c_bar } else { 0.0 };
    let rest: Vec<f64> = rate.iter().zip(m).map(|(r, w)| 0.5 * (r - c_bar) * w).collect();
    let a = op.stiffness().scaled_plus_diag(0.5, 1.0, &rest);
    let scheme = HeatScheme { steps_first: steps, steps_per_segment: 1, smoothing_steps: HeatScheme::default().smoothing_steps };
    let stepper = Stepper::new(a, m.to_vec(), &[t], scheme)?;
    let decay = (-0.5 * c_bar * t).exp();
    Ok(stepper.run(f0).pop().unwrap().into_iter().map(|x| x * decay).collect())
}
