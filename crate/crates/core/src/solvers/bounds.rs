//! Reference error bounds for the noisy programs.
//!
//! The constants in front of these bounds are unnamed in the theory, so `c`
//! defaults to 1 and the values are shape references rather than certified
//! envelopes.

use serde::{Deserialize, Serialize};

use super::Program;
use crate::error::{Error, Result};
use crate::model::{best_s_approx, Signal};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBoundInputs {
    /// Largest sparsity level `s̄` the minimization ranges over.
    pub s_max: usize,
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
    pub mu: f64,
    pub beta: f64,
    #[serde(skip)]
    pub x: Option<Signal>,
    /// Leading constant.
    pub c: f64,
}

impl ErrorBoundInputs {
    pub fn new(s_max: usize, m: usize, n: usize, sigma: f64, beta: f64, x: Signal) -> Result<Self> {
        let inputs = ErrorBoundInputs { s_max, m, n, sigma, mu: 1.0, beta, x: Some(x), c: 1.0 };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.s_max < 1 || self.s_max > self.n {
            return Err(Error::InvalidArgument(format!("need 1 <= s <= n, got s={} n={}", self.s_max, self.n)));
        }
        if self.m == 0 {
            return Err(Error::InvalidArgument("m must be positive".into()));
        }
        if !(self.beta > 0.0) || !(self.sigma >= 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidArgument("beta must be > 0, sigma >= 0 and c finite".into()));
        }
        match &self.x {
            Some(x) if x.len() == self.n => Ok(()),
            Some(_) => Err(Error::DimensionMismatch("x must have length n".into())),
            None => Err(Error::InvalidArgument("signal x is required".into())),
        }
    }

    fn tail_l1(&self, s: usize) -> Result<f64> {
        let x = self.x.as_ref().expect("validated");
        let xs = best_s_approx(x, s)?;
        Ok((x.as_vector() - xs.as_vector()).iter().map(|t| t.abs()).sum())
    }

    fn factor(&self, s: usize, program: Program) -> f64 {
        let a = alpha(s, self.m, self.n, self.beta);
        match program {
            Program::Dantzig => self.c * (1.0 + a * a),
            _ => self.c * (1.0 + a),
        }
    }
}

/// `α = √((1+β)·s·log⁵n / m)`.
pub fn alpha(s: usize, m: usize, n: usize, beta: f64) -> f64 {
    let ln = (n as f64).ln();
    ((1.0 + beta) * s as f64 * ln.powi(5) / m as f64).sqrt()
}

/// `min_{1≤s≤s̄} C(1+α)·[‖x − x_s‖₁/√s + σ√(s log n / m)]`, with `1+α²`
/// for the Dantzig selector.
pub fn l2_error_bound(inputs: &ErrorBoundInputs, program: Program) -> Result<f64> {
    inputs.validate()?;
    let ln = (inputs.n as f64).ln();
    let mut best = f64::INFINITY;
    for s in 1..=inputs.s_max {
        let sf = s as f64;
        let bracket = inputs.tail_l1(s)? / sf.sqrt() + inputs.sigma * (sf * ln / inputs.m as f64).sqrt();
        best = best.min(inputs.factor(s, program) * bracket);
    }
    Ok(best)
}

/// `min_{1≤s≤s̄} C(1+α)·[‖x − x_s‖₁ + s·σ√(log n / m)]`, with `1+α²` for
/// the Dantzig selector.
pub fn l1_error_bound(inputs: &ErrorBoundInputs, program: Program) -> Result<f64> {
    inputs.validate()?;
    let ln = (inputs.n as f64).ln();
    let mut best = f64::INFINITY;
    for s in 1..=inputs.s_max {
        let sf = s as f64;
        let bracket = inputs.tail_l1(s)? + sf * inputs.sigma * (ln / inputs.m as f64).sqrt();
        best = best.min(inputs.factor(s, program) * bracket);
    }
    Ok(best)
}
