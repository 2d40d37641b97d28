//! Degree binning.
//!
//! The first `tau` bins are singletons `{1}, {2}, ..., {tau}`; after that bin
//! sizes grow geometrically with rate `omega`. For `tau = 2, omega = 2` the
//! bins are `{1}, {2}, {3,4}, {5..8}, {9..16}, ...`.

use serde::Serialize;

use crate::error::{Error, Result};

pub type BinId = u64;

/// Binning parameters `(tau, omega)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinConfig {
    tau: u64,
    omega: f64,
}

impl BinConfig {
    pub fn new(tau: u64, omega: f64) -> Result<Self> {
        if tau < 1 {
            return Err(Error::Config(format!("tau must be at least 1, got {tau}")));
        }
        if omega.is_nan() || omega <= 1.0 || !omega.is_finite() {
            return Err(Error::Config(format!("omega must be a finite real > 1, got {omega}")));
        }
        Ok(BinConfig { tau, omega })
    }

    /// `tau = 2, omega = 2`.
    pub fn standard() -> Self {
        BinConfig { tau: 2, omega: 2.0 }
    }

    /// One bin holding every degree in `2..=10^7 + 1`.
    pub fn single_bin() -> Self {
        BinConfig {
            tau: 1,
            omega: 1e7,
        }
    }

    /// Singleton bins for every degree up to `max_degree`.
    pub fn singletons(max_degree: u64) -> Self {
        BinConfig {
            tau: max_degree.max(1),
            omega: 2.0,
        }
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Bin holding degree `d`.
    pub fn bin_id(&self, d: u64) -> Result<BinId> {
        if d == 0 {
            return Err(Error::ZeroDegree);
        }
        if d <= self.tau {
            return Ok(d);
        }
        let x = 1.0 + (self.omega - 1.0) * (d - self.tau) as f64;
        let mut b = (x.ln() / self.omega.ln()).floor().max(1.0) as u64 + self.tau;
        // The float estimate can land one bin off near a boundary.
        loop {
            let next = self.bin_lo_deg(b + 1);
            if next > d || next == u64::MAX {
                break;
            }
            b += 1;
        }
        while b > self.tau + 1 && self.bin_lo_deg(b) > d {
            b -= 1;
        }
        Ok(b)
    }

    /// Lowest degree in bin `b`. Saturates at `u64::MAX` for bins beyond any
    /// representable degree.
    ///
    /// # Panics
    /// If `b == 0`.
    pub fn bin_lo_deg(&self, b: BinId) -> u64 {
        assert!(b >= 1, "bin ids start at 1");
        if b <= self.tau {
            return b;
        }
        let j = b - self.tau;
        let span = match self.integral_omega() {
            Some(w) => geometric_sum(w, j),
            None => {
                let s = ((self.omega.powf(j as f64) - 1.0) / (self.omega - 1.0)).ceil();
                if s.is_finite() && s < u64::MAX as f64 {
                    s as u64
                } else {
                    u64::MAX
                }
            }
        };
        span.saturating_add(self.tau)
    }

    /// True when every degree in `2..=max_degree` shares a bin.
    pub fn is_single_bin_up_to(&self, max_degree: u64) -> bool {
        max_degree < 2 || self.bin_lo_deg(3) > max_degree
    }

    fn integral_omega(&self) -> Option<u128> {
        (self.omega.fract() == 0.0 && self.omega < 9.0e15).then_some(self.omega as u128)
    }
}

/// `1 + w + ... + w^(j-1)`, saturating.
fn geometric_sum(w: u128, j: u64) -> u64 {
    let mut sum: u128 = 0;
    let mut term: u128 = 1;
    for _ in 0..j {
        sum += term;
        if sum >= u64::MAX as u128 {
            return u64::MAX;
        }
        term = term.saturating_mul(w);
    }
    sum as u64
}
