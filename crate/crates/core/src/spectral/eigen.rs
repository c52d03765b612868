use crate::error::{Error, Result};
use crate::femcore::DiscreteOperator;
use crate::linalg::{dot, norm, SpdSolver};

pub const RESIDUAL_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 2000;

/// Smallest generalized eigenpair of `(K, M)` on the free dofs.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda1: f64,
    /// M-normalised, with nonnegative sum.
    pub eigenvector: Vec<f64>,
    /// `‖Kv − λMv‖ / ‖Mv‖`.
    pub residual: f64,
    pub iterations: usize,
}

/// First Dirichlet eigenvalue by shifted inverse iteration.
///
/// The shift is only adopted once `K − σM` factorises, which certifies
/// `σ < λ₁`.
pub fn lambda1(op: &DiscreteOperator) -> Result<EigenResult> {
    let k = op.stiffness();
    let m = op.mass();
    let n = op.n_free();
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    let mut solver = SpdSolver::new(k)?;
    let mut shift = 0.0;
    let mut v = vec![1.0; n];
    normalise(&mut v, m);
    let mut residual = f64::INFINITY;
    let mut next_shift_attempt = 6;
    for it in 1..=MAX_ITERATIONS {
        let rhs: Vec<f64> = v.iter().zip(m).map(|(x, w)| x * w).collect();
        v = solver.solve(&rhs);
        normalise(&mut v, m);
        let kv = k.matvec(&v);
        let lambda = dot(&v, &kv);
        let mv: Vec<f64> = v.iter().zip(m).map(|(x, w)| x * w).collect();
        let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - lambda * b).collect();
        residual = norm(&r) / norm(&mv);
        if residual <= RESIDUAL_TOL {
            if v.iter().sum::<f64>() < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            return Ok(EigenResult { lambda1: lambda, eigenvector: v, residual, iterations: it });
        }
        if it == next_shift_attempt {
            next_shift_attempt *= 3;
            // an eigenvalue lies within the M⁻¹-norm residual of λ
            let res_m = r.iter().zip(m).map(|(x, w)| x * x / w).sum::<f64>().sqrt();
            let sigma = lambda - 2.0 * res_m;
            if sigma > shift && sigma > 0.0 {
                let shifted = k.scaled_plus_diag(1.0, -sigma, m);
                if let Ok(s) = SpdSolver::new(&shifted) {
                    solver = s;
                    shift = sigma;
                }
            }
        }
    }
    Err(Error::NotConverged { iterations: MAX_ITERATIONS, residual })
}

fn normalise(v: &mut [f64], m: &[f64]) {
    let s = v.iter().zip(m).map(|(x, w)| x * x * w).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= s);
}
