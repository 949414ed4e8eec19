//! Closed-form concentration bounds and Monte Carlo checks against them.
//!
//! The tail functions return probabilities clamped to `[0, 1]`. Each
//! `empirical_*` validator draws fresh matrices on per-trial random streams,
//! counts event occurrences exactly and attaches the matching closed-form
//! bound plus a Clopper–Pearson 95% interval for the observed frequency.

mod empirical;
pub(crate) mod noise;
mod rip;

pub use empirical::{empirical_estimate, EmpiricalReport, EventQuery};
pub use noise::{noise_correlation_bound, noise_exceedance};
pub use rip::{rip_constant_exact, weak_rip_empirical, RipMode, WeakRipReport, EXHAUSTIVE_LIMIT, RIP_SUBSET_LIMIT};

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};

/// Which of the four estimates a query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimate {
    /// `‖A_T*A_T − I‖ ≥ δ`.
    E1,
    /// `‖(A*A − I)v‖₂ ≥ t‖v‖₂` for fixed `v` supported on `T`.
    E2,
    /// `‖A_{T^c}*Av‖_∞ ≥ t‖v‖₂` for fixed `v` supported on `T`.
    E3,
    /// `max_{i∈T^c} ‖A_T*A_{i}‖₂ ≥ t`.
    E4,
}

impl std::str::FromStr for Estimate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e1" => Ok(Estimate::E1),
            "e2" => Ok(Estimate::E2),
            "e3" => Ok(Estimate::E3),
            "e4" => Ok(Estimate::E4),
            other => Err(Error::Parse(format!("unknown estimate {other:?}"))),
        }
    }
}

impl std::fmt::Display for Estimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimate::E1 => "e1",
            Estimate::E2 => "e2",
            Estimate::E3 => "e3",
            Estimate::E4 => "e4",
        })
    }
}

/// Parameters of a tail bound. `level` is `δ` for E1 and `t` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBoundQuery {
    pub which: Estimate,
    pub m: usize,
    pub s: usize,
    pub n: usize,
    pub mu: f64,
    pub level: f64,
}

impl TailBoundQuery {
    pub fn new(which: Estimate, m: usize, s: usize, n: usize, mu: f64, level: f64) -> Result<Self> {
        let q = TailBoundQuery { which, m, s, n, mu, level };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.s > self.n {
            return Err(Error::InvalidArgument(format!("need 1 <= s <= n, got s={} n={}", self.s, self.n)));
        }
        if !(self.mu >= 1.0 && self.mu.is_finite()) {
            return Err(Error::InvalidArgument("mu must be finite and >= 1".into()));
        }
        if !(self.level >= 0.0 && self.level.is_finite()) {
            return Err(Error::InvalidArgument("deviation level must be finite and >= 0".into()));
        }
        Ok(())
    }

    fn ratio(&self) -> f64 {
        self.m as f64 / (self.mu * self.s as f64)
    }
}

/// A tail value plus whether the query lies outside the stated range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub value: f64,
    pub out_of_range: bool,
}

fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        1.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// `min(1, 2d·exp(−(t²/2)/(σ² + Bt/3)))`.
pub fn matrix_bernstein_tail(d: usize, b: f64, sigma_sq: f64, t: f64) -> f64 {
    clamp01(2.0 * d as f64 * (-(t * t / 2.0) / (sigma_sq + b * t / 3.0)).exp())
}

/// `min(1, exp(−t²/(8σ²) + 1/4))`, valid for `0 ≤ t ≤ σ²/B`.
pub fn vector_bernstein_tail(sigma_sq: f64, t: f64) -> f64 {
    clamp01((-(t * t) / (8.0 * sigma_sq) + 0.25).exp())
}

/// `2s·exp(−(m/(μs))·δ²/(2(1+δ/3)))`.
pub fn e1_tail(q: &TailBoundQuery) -> f64 {
    let d = q.level;
    clamp01(2.0 * q.s as f64 * (-q.ratio() * d * d / (2.0 * (1.0 + d / 3.0))).exp())
}

/// `exp(−¼(t√(m/(μs)) − 1)²)`, and 1 when `t√(m/(μs)) < 1`.
pub fn e2_tail(q: &TailBoundQuery) -> f64 {
    let x = q.level * q.ratio().sqrt();
    if x < 1.0 {
        1.0
    } else {
        clamp01((-0.25 * (x - 1.0).powi(2)).exp())
    }
}

/// `2n·exp(−(m/(2μ))·t²/(1 + √s·t/3))`.
pub fn e3_tail(q: &TailBoundQuery) -> f64 {
    let t = q.level;
    let expo = -(q.m as f64 / (2.0 * q.mu)) * t * t / (1.0 + (q.s as f64).sqrt() * t / 3.0);
    clamp01(2.0 * q.n as f64 * expo.exp())
}

/// `n·exp(−mt²/(8μs) + 1/4)`, stated for `0 ≤ t ≤ √s`.
pub fn e4_tail(q: &TailBoundQuery) -> f64 {
    let t = q.level;
    clamp01(q.n as f64 * (-(q.m as f64) * t * t / (8.0 * q.mu * q.s as f64) + 0.25).exp())
}

/// Dispatches on `q.which` and flags queries outside the stated range
/// (`t > 1/2` for E2, `t > √s` for E4).
pub fn tail_bound(q: &TailBoundQuery) -> Result<TailBound> {
    q.validate()?;
    Ok(match q.which {
        Estimate::E1 => TailBound { value: e1_tail(q), out_of_range: false },
        Estimate::E2 => TailBound { value: e2_tail(q), out_of_range: q.level > 0.5 },
        Estimate::E3 => TailBound { value: e3_tail(q), out_of_range: false },
        Estimate::E4 => TailBound { value: e4_tail(q), out_of_range: q.level > (q.s as f64).sqrt() },
    })
}

/// Clopper–Pearson two-sided 95% interval for `k` events in `n` trials.
pub fn clopper_pearson(k: usize, n: usize) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 <= k <= n and n > 0");
    let alpha = 0.05;
    let lower = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64).expect("positive shapes").inverse_cdf(alpha / 2.0)
    };
    let upper = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64).expect("positive shapes").inverse_cdf(1.0 - alpha / 2.0)
    };
    (lower, upper)
}
