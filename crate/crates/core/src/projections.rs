//! Euclidean projection onto the l1 ball `{x : |x|_1 <= tau}`.
//!
//! The projection is the soft threshold `sign(z) max(|z| - lambda, 0)` with
//! the level `lambda` chosen so the result lands on the sphere. The ball is
//! convex, so the projection is unique and ties at the threshold need no
//! special handling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Ball {
    tau: f64,
}

impl L1Ball {
    pub fn new(tau: f64) -> Result<Self> {
        if tau.is_nan() || tau < 0.0 {
            return Err(Error::NegativeRadius(tau));
        }
        Ok(Self { tau })
    }

    pub fn radius(&self) -> f64 {
        self.tau
    }

    pub fn contains(&self, x: &[f64], rel_slack: f64) -> bool {
        l1_norm(x) <= self.tau * (1.0 + rel_slack)
    }

    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        project_l1(z, self.tau)
    }
}

pub fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn validate(z: &[f64], tau: f64) -> Result<()> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::NegativeRadius(tau));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn soft_threshold(z: &[f64], level: f64) -> Vec<f64> {
    z.iter()
        .map(|&v| v.signum() * (v.abs() - level).max(0.0))
        .collect()
}

/// Sort-based projection, O(n log n).
pub fn project_l1(z: &[f64], tau: f64) -> Result<Vec<f64>> {
    validate(z, tau)?;
    if l1_norm(z) <= tau {
        return Ok(z.to_vec());
    }
    if tau == 0.0 {
        return Ok(vec![0.0; z.len()]);
    }
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    // largest rho with mags[rho] > (cumsum[rho] - tau) / (rho + 1)
    let mut cumsum = 0.0;
    let mut level = 0.0;
    for (i, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - tau) / (i + 1) as f64;
        if m > candidate {
            level = candidate;
        } else {
            break;
        }
    }
    let mut x = soft_threshold(z, level);
    // guard the post-condition against cancellation in the running sum
    let norm = l1_norm(&x);
    if norm > tau {
        let scale = tau / norm;
        x.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(x)
}

/// O(n^2) reference: every support size `s` defines a candidate level
/// `(sum of the s largest magnitudes - tau) / s`; the candidate whose soft
/// threshold lands closest to the sphere is the projection.
pub fn project_l1_oracle(z: &[f64], tau: f64) -> Result<Vec<f64>> {
    validate(z, tau)?;
    if l1_norm(z) <= tau {
        return Ok(z.to_vec());
    }
    if tau == 0.0 {
        return Ok(vec![0.0; z.len()]);
    }
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for support in 1..=mags.len() {
        let level = ((mags[..support].iter().sum::<f64>() - tau) / support as f64).max(0.0);
        let x = soft_threshold(z, level);
        let gap = (l1_norm(&x) - tau).abs();
        if best.as_ref().is_none_or(|(g, _)| gap < *g) {
            best = Some((gap, x));
        }
    }
    Ok(best.map(|(_, x)| x).unwrap_or_default())
}
