//! Critical exponents and the blow-up region of the damped problem.
//!
//! The region is
//!
//! ```text
//! 1 < p <= (n+1)/(n-1)_+                  if β >= -1
//! 1 < p <= (n(1-β)+2)/(n(1-β)-2)_+        if β <= -1
//! ```
//!
//! with `(x)_+ = max(0, x)` and a vanishing denominator read as `+∞`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Upper end of a blow-up interval. `Infinite` is a genuine state (a
/// `(·)_+` denominator equal to zero), not an overflowed float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    Finite(f64),
    Infinite,
}

impl Threshold {
    /// `numerator / (denominator)_+`, with a nonpositive denominator giving `+∞`.
    fn ratio_plus(numerator: f64, denominator: f64) -> Self {
        if denominator > 0.0 {
            Threshold::Finite(numerator / denominator)
        } else {
            Threshold::Infinite
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Threshold::Infinite)
    }

    /// The finite value, or `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match self {
            Threshold::Finite(v) => *v,
            Threshold::Infinite => f64::INFINITY,
        }
    }

    /// `p <= threshold`.
    pub fn admits(&self, p: f64) -> bool {
        match self {
            Threshold::Finite(v) => p <= *v,
            Threshold::Infinite => true,
        }
    }
}

impl PartialOrd for Threshold {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Threshold::Infinite, Threshold::Infinite) => Some(Ordering::Equal),
            (Threshold::Infinite, Threshold::Finite(_)) => Some(Ordering::Greater),
            (Threshold::Finite(_), Threshold::Infinite) => Some(Ordering::Less),
            (Threshold::Finite(a), Threshold::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Finite(v) => write!(f, "{v}"),
            Threshold::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionVerdict {
    TheoremBlowup,
    OutsideTheorem,
}

impl RegionVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            RegionVerdict::TheoremBlowup => "TheoremBlowup",
            RegionVerdict::OutsideTheorem => "OutsideTheorem",
        }
    }
}

/// Hölder conjugate `p/(p-1)`.
pub fn conjugate_exponent(p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid(format!("conjugate exponent needs p > 1, got {p}")));
    }
    Ok(p / (p - 1.0))
}

/// Positive root of `(n-1)p^2 - (n+1)p - 2 = 0`.
pub fn strauss_exponent(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("Strauss exponent is defined for n >= 2, got {n}")));
    }
    let n = n as f64;
    Ok((n + 1.0 + (n * n + 10.0 * n - 7.0).sqrt()) / (2.0 * (n - 1.0)))
}

/// `(n-1)p^2 - (n+1)p - 2`.
pub fn strauss_residual(n: u32, p: f64) -> f64 {
    let n = n as f64;
    (n - 1.0) * p * p - (n + 1.0) * p - 2.0
}

/// Kato exponent `(n+1)/(n-1)_+`.
pub fn kato_threshold(n: u32) -> Threshold {
    let n = n as f64;
    Threshold::ratio_plus(n + 1.0, n - 1.0)
}

pub fn beta_threshold(n: u32, beta: f64) -> Threshold {
    if beta >= -1.0 {
        kato_threshold(n)
    } else {
        let m = n as f64 * (1.0 - beta);
        Threshold::ratio_plus(m + 2.0, m - 2.0)
    }
}

/// Local-existence restriction `p <= n/(n-2)` for `n >= 3`; `+∞` otherwise.
/// Exposed for sweep configuration; [`classify`] does not intersect with it.
pub fn local_existence_bound(n: u32) -> Threshold {
    if n >= 3 {
        Threshold::Finite(n as f64 / (n as f64 - 2.0))
    } else {
        Threshold::Infinite
    }
}

pub fn classify(n: u32, beta: f64, p: f64) -> Result<RegionVerdict> {
    if !(p > 1.0) {
        return Err(invalid(format!("classify needs p > 1, got {p}")));
    }
    Ok(if beta_threshold(n, beta).admits(p) {
        RegionVerdict::TheoremBlowup
    } else {
        RegionVerdict::OutsideTheorem
    })
}

/// Space-scale exponent `d` of the test function: 1 for `β >= -1`, `(1-β)/2` below.
pub fn scaling_d(beta: f64) -> f64 {
    if beta >= -1.0 {
        1.0
    } else {
        (1.0 - beta) / 2.0
    }
}
