use super::kernel::KernelSet;
use crate::error::{Error, Result};

/// Column of grid `gi` at time `s`, linearly interpolated between grid times.
fn column_at(set: &KernelSet, gi: usize, s: f64) -> Result<Vec<f64>> {
    let g = &set.grids[gi];
    let ts = &g.times;
    let t_min = ts[0];
    if s < t_min * (1.0 - 1e-12) {
        return Err(Error::BelowTimeGrid { t: s, t_min });
    }
    if s > ts[ts.len() - 1] * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("time {s} beyond the grid")));
    }
    let k = ts.partition_point(|&t| t < s).min(ts.len() - 1);
    if k == 0 || (ts[k] - s).abs() <= 1e-12 * s {
        return Ok(g.columns[k].clone());
    }
    let w = (s - ts[k - 1]) / (ts[k] - ts[k - 1]);
    Ok(g.columns[k - 1].iter().zip(&g.columns[k]).map(|(a, b)| (1.0 - w) * a + w * b).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanValueSample {
    pub source: usize,
    pub t: f64,
    pub tau: f64,
    pub q: f64,
    pub c_mv: f64,
}

/// `C_mv = u^q(t)(x) τ^{1+d/2} a^{d/2} / ∫_{t-τ}^t ∫_{B_√τ(x)} u^q dvol ds`
/// for `u = p(·, ·, x)` and `x` the source of grid `gi`.
///
/// The time integral is a trapezoid rule on the grid times in
/// `[t - τ, t]` plus the two interpolated end points.
pub fn mean_value_check(set: &KernelSet, gi: usize, t: f64, tau: f64, q: f64, a: f64) -> Result<MeanValueSample> {
    if !(tau > 0.0 && tau < t) || !(q > 0.0) || !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("need 0 < tau < t, q > 0, a > 0 (tau = {tau}, t = {t})")));
    }
    let g = &set.grids[gi];
    let x = g.source;
    let dist = &set.distances[gi];
    let radius = tau.sqrt();
    let ball: Vec<usize> = (0..dist.len()).filter(|&v| dist[v] < radius).collect();
    let vol: f64 = ball.iter().map(|&v| set.mass[v]).sum();
    if ball.len() < 2 || vol <= 0.0 {
        return Err(Error::EmptyDomain);
    }
    let mut knots = vec![t - tau];
    knots.extend(g.times.iter().copied().filter(|&s| s > t - tau && s < t));
    knots.push(t);
    let space = |s: f64| -> Result<f64> {
        let col = column_at(set, gi, s)?;
        Ok(ball.iter().map(|&v| col[v].powf(q) * set.mass[v]).sum())
    };
    let vals = knots.iter().map(|&s| space(s)).collect::<Result<Vec<_>>>()?;
    let integral: f64 = knots.windows(2).zip(vals.windows(2)).map(|(s, f)| 0.5 * (s[1] - s[0]) * (f[0] + f[1])).sum();
    let u_t = column_at(set, gi, t)?[x];
    let half_d = set.dim as f64 / 2.0;
    let c_mv = u_t.powf(q) * tau.powf(1.0 + half_d) * a.powf(half_d) / integral;
    Ok(MeanValueSample { source: x, t, tau, q, c_mv })
}
