//! Sample sizes and estimators for wedge sampling.

use serde::Serialize;

use crate::error::{Error, Result};

/// Samples per bin `k` for additive error `eps` with probability `1 - delta`,
/// from Hoeffding's inequality: `k = ceil(0.5 * eps^-2 * ln(2 / delta))`.
pub fn required_samples(eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("epsilon must be in (0, 1), got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must be in (0, 1), got {delta}")));
    }
    Ok((0.5 * (2.0 / delta).ln() / (eps * eps)).ceil() as u64)
}

/// Error/confidence target and the resulting per-bin sample count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleBudget {
    pub eps: f64,
    pub delta: f64,
    pub k: u64,
}

impl SampleBudget {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        Ok(SampleBudget {
            eps,
            delta,
            k: required_samples(eps, delta)?,
        })
    }
}

/// Fraction of sampled wedges that are closed.
pub fn cc_estimate(closed: u64, total: u64) -> Result<f64> {
    if total == 0 {
        return Err(Error::EmptyBin);
    }
    debug_assert!(closed <= total);
    Ok(closed as f64 / total as f64)
}

/// Triangles touching a bin, `p * (q1 + q2/2 + q3/3) / total`, where `q_j`
/// counts closed wedges with `j` of their three vertices in the bin.
pub fn triangle_estimate(q1: u64, q2: u64, q3: u64, total: u64, p: u64) -> Result<f64> {
    if total == 0 {
        return Err(Error::EmptyBin);
    }
    debug_assert!(q1 + q2 + q3 <= total);
    // 6 * (q1 + q2/2 + q3/3) keeps the weighted sum integral.
    let weighted = 6 * q1 as u128 + 3 * q2 as u128 + 2 * q3 as u128;
    Ok(p as f64 * weighted as f64 / (6 * total as u128) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GlobalEstimate {
    pub c: f64,
    pub t: f64,
    pub p: u64,
    pub bins: u64,
}

impl GlobalEstimate {
    /// Union-bound confidence when each bin holds with probability `1 - delta`.
    pub fn confidence(&self, delta: f64) -> f64 {
        (1.0 - self.bins as f64 * delta).max(0.0)
    }
}

/// Combine per-bin `(p_b, c_b)` into `c = sum (p_b / p) c_b` and `t = c p / 3`.
/// Bins with no wedges carry no weight and are skipped.
pub fn global_aggregate<I>(bins: I) -> Result<GlobalEstimate>
where
    I: IntoIterator<Item = (u64, f64)>,
{
    let mut p: u64 = 0;
    let mut weighted = 0.0;
    let mut count = 0;
    for (pb, cb) in bins {
        if pb == 0 {
            continue;
        }
        p += pb;
        weighted += pb as f64 * cb;
        count += 1;
    }
    if p == 0 {
        return Err(Error::NoWedges);
    }
    let c = (weighted / p as f64).clamp(0.0, 1.0);
    Ok(GlobalEstimate {
        c,
        t: c * p as f64 / 3.0,
        p,
        bins: count,
    })
}
