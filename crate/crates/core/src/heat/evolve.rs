use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::femcore::DiscreteOperator;
use crate::linalg::{CsrMatrix, SpdSolver};

/// Step counts of the implicit scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeatScheme {
    /// Steps from 0 to the first output time.
    pub steps_first: usize,
    /// Steps between consecutive output times.
    pub steps_per_segment: usize,
    /// Leading backward-Euler steps; the rest are trapezoidal.
    pub smoothing_steps: usize,
}

impl Default for HeatScheme {
    fn default() -> Self {
        Self { steps_first: 64, steps_per_segment: 16, smoothing_steps: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum StepKind {
    BackwardEuler,
    Trapezoidal,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    dt: f64,
    steps: usize,
    smoothing: usize,
}

/// Integrates `M u' = −A u` through a list of output times, reusing one
/// factorisation per distinct `(step kind, dt)`.
///
/// For the heat flow `A = ½K`.
pub struct Stepper {
    a: CsrMatrix,
    m: Vec<f64>,
    times: Vec<f64>,
    segments: Vec<Segment>,
    solvers: HashMap<(StepKind, u64), SpdSolver>,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper")
            .field("n", &self.m.len())
            .field("times", &self.times)
            .field("factorisations", &self.solvers.len())
            .finish()
    }
}

impl Stepper {
    pub fn new(a: CsrMatrix, m: Vec<f64>, times: &[f64], scheme: HeatScheme) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidArgument("no output times".into()));
        }
        if scheme.steps_first == 0 || (times.len() > 1 && scheme.steps_per_segment == 0) {
            return Err(Error::InvalidArgument("step counts must be at least 1".into()));
        }
        let mut prev = 0.0;
        let mut segments = Vec::with_capacity(times.len());
        for (k, &t) in times.iter().enumerate() {
            if !(t > prev) {
                return Err(Error::InvalidArgument("output times must be positive and increasing".into()));
            }
            let steps = if k == 0 { scheme.steps_first } else { scheme.steps_per_segment };
            let smoothing = if k == 0 { scheme.smoothing_steps.min(steps) } else { 0 };
            segments.push(Segment { dt: (t - prev) / steps as f64, steps, smoothing });
            prev = t;
        }
        let mut solvers = HashMap::new();
        for s in &segments {
            let mut kinds = Vec::new();
            if s.smoothing > 0 {
                kinds.push(StepKind::BackwardEuler);
            }
            if s.steps > s.smoothing {
                kinds.push(StepKind::Trapezoidal);
            }
            for kind in kinds {
                let key = (kind, s.dt.to_bits());
                if solvers.contains_key(&key) {
                    continue;
                }
                let c = match kind {
                    StepKind::BackwardEuler => s.dt,
                    StepKind::Trapezoidal => 0.5 * s.dt,
                };
                let lhs = a.scaled_plus_diag(c, 1.0, &m);
                let solver = SpdSolver::new(&lhs)
                    .map_err(|e| Error::Factorization(format!("implicit step matrix at dt = {}: {e}", s.dt)))?;
                solvers.insert(key, solver);
            }
        }
        Ok(Self { a, m, times: times.to_vec(), segments, solvers })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Snapshots of the solution at every output time.
    pub fn run(&self, u0: &[f64]) -> Vec<Vec<f64>> {
        let mut u = u0.to_vec();
        let mut out = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            for step in 0..s.steps {
                let kind = if step < s.smoothing { StepKind::BackwardEuler } else { StepKind::Trapezoidal };
                let solver = &self.solvers[&(kind, s.dt.to_bits())];
                let rhs: Vec<f64> = match kind {
                    StepKind::BackwardEuler => u.iter().zip(&self.m).map(|(x, w)| x * w).collect(),
                    StepKind::Trapezoidal => {
                        let au = self.a.matvec(&u);
                        u.iter()
                            .zip(&self.m)
                            .zip(au)
                            .map(|((x, w), y)| x * w - 0.5 * s.dt * y)
                            .collect()
                    }
                };
                u = solver.solve(&rhs);
            }
            out.push(u.clone());
        }
        out
    }
}

/// `P_t f₀` for the generator `½ M⁻¹K` on the free dofs.
pub fn evolve(op: &DiscreteOperator, f0: &[f64], t: f64, steps: usize) -> Result<Vec<f64>> {
    evolve_with(op, f0, t, steps, HeatScheme::default().smoothing_steps)
}

/// As [`evolve`] with an explicit number of leading backward-Euler steps.
pub fn evolve_with(op: &DiscreteOperator, f0: &[f64], t: f64, steps: usize, smoothing: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    if f0.len() != op.n_free() {
        return Err(Error::InvalidArgument("initial data does not match the free dofs".into()));
    }
    let scheme = HeatScheme { steps_first: steps, steps_per_segment: 1, smoothing_steps: smoothing };
    let a = op.stiffness().scaled_plus_diag(0.5, 0.0, op.mass());
    let stepper = Stepper::new(a, op.mass().to_vec(), &[t], scheme)?;
    Ok(stepper.run(f0).pop().unwrap())
}

/// Generator matrix `½K` of the heat flow.
pub fn heat_generator(op: &DiscreteOperator) -> CsrMatrix {
    op.stiffness().scaled_plus_diag(0.5, 0.0, op.mass())
}
