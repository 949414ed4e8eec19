//! Recovery programs and their diagnostics.
//!
//! * basis pursuit: `min ‖x‖₁ s.t. Ax = y`, by ADMM;
//! * LASSO: `min ½‖Ax − y‖₂² + λσ_m‖x‖₁`, by FISTA with function-value
//!   restart;
//! * Dantzig selector: `min ‖x‖₁ s.t. ‖A*(Ax − y)‖_∞ ≤ λσ_m`, by ADMM with
//!   the residual correlation as a boxed auxiliary variable.
//!
//! Each solver periodically tries to *polish* its iterate: it guesses the
//! support and active set, solves the resulting linear system exactly and
//! keeps the result only if it verifies the optimality conditions. Every
//! reported solution carries its own optimality evidence (a KKT residual or
//! a duality gap), and `converged` is set only when that evidence is within
//! tolerance.

mod basis_pursuit;
mod bounds;
mod dantzig;
mod lasso;

pub use basis_pursuit::basis_pursuit;
pub use bounds::{alpha, l1_error_bound, l2_error_bound, ErrorBoundInputs};
pub use dantzig::dantzig;
pub use lasso::lasso;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MeasurementMatrix, MeasurementVector, Signal};

/// Which recovery program to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Program {
    #[serde(alias = "basis_pursuit")]
    Bp,
    Lasso,
    Dantzig,
}

impl std::str::FromStr for Program {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bp" | "basis_pursuit" => Ok(Program::Bp),
            "lasso" => Ok(Program::Lasso),
            "dantzig" => Ok(Program::Dantzig),
            other => Err(Error::Parse(format!("unknown program {other:?}"))),
        }
    }
}

impl std::fmt::Display for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Program::Bp => "bp",
            Program::Lasso => "lasso",
            Program::Dantzig => "dantzig",
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Attempt support-based polishing.
    pub polish: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { abs_tol: 1e-9, rel_tol: 1e-7, max_iters: 100_000, polish: true }
    }
}

/// The default regularization level `10·√(log n)`.
pub fn default_lambda(n: usize) -> f64 {
    10.0 * (n as f64).ln().max(0.0).sqrt()
}

/// `(A, y, σ_m, λ)` for one recovery.
#[derive(Debug, Clone)]
pub struct RecoveryProblem {
    a: MeasurementMatrix,
    y: MeasurementVector,
    lambda: f64,
}

impl RecoveryProblem {
    /// `lambda = None` selects `10·√(log n)`.
    pub fn new(a: MeasurementMatrix, y: MeasurementVector, lambda: Option<f64>) -> Result<Self> {
        a.as_real()?;
        y.as_real()?;
        if y.len() != a.nrows() {
            return Err(Error::DimensionMismatch(format!("{} measurements for {} rows", y.len(), a.nrows())));
        }
        let lambda = lambda.unwrap_or_else(|| default_lambda(a.ncols()));
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument("lambda must be finite and >= 0".into()));
        }
        Ok(RecoveryProblem { a, y, lambda })
    }

    pub fn matrix(&self) -> &MeasurementMatrix {
        &self.a
    }

    pub fn measurements(&self) -> &MeasurementVector {
        &self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma_m(&self) -> f64 {
        self.y.sigma_m()
    }

    /// `λ·σ_m`, the LASSO penalty and Dantzig constraint level.
    pub fn penalty(&self) -> f64 {
        self.lambda * self.y.sigma_m()
    }

    pub fn solve(&self, program: Program, opts: &SolverOptions) -> Result<SolverResult> {
        match program {
            Program::Bp => basis_pursuit(&self.a, &self.y, opts),
            Program::Lasso => lasso(&self.a, &self.y, self.penalty(), opts),
            Program::Dantzig => dantzig(&self.a, &self.y, self.penalty(), opts),
        }
    }
}

/// Estimate plus the evidence of its optimality.
#[derive(Debug, Clone, Serialize)]
pub struct SolverResult {
    pub program: Program,
    #[serde(serialize_with = "ser_signal")]
    pub x_hat: Signal,
    pub iterations: usize,
    /// LASSO: largest violation of the subgradient conditions. Basis pursuit
    /// and Dantzig: relative duality gap `(p − d)/max(1, |p|)`.
    pub kkt_residual: f64,
    /// Threshold `kkt_residual` is compared against.
    pub tolerance: f64,
    /// Constraint violation of `x_hat` (`‖Ax̂ − y‖₂` or the Dantzig box excess).
    pub feasibility: f64,
    /// `‖A*(Ax̂ − y)‖_∞`.
    pub tube_value: f64,
    pub objective: f64,
    pub dual_objective: Option<f64>,
    pub converged: bool,
    /// True when the reported point came from the exact support solve.
    pub polished: bool,
    /// Objective at checkpoints of the iteration (every few iterations).
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

fn ser_signal<S: serde::Serializer>(x: &Signal, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(x.as_slice().iter())
}

impl SolverResult {
    /// `x̂ − x` for a known truth.
    pub fn error_vector(&self, truth: &Signal) -> Result<DVector<f64>> {
        if truth.len() != self.x_hat.len() {
            return Err(Error::DimensionMismatch("truth and estimate lengths differ".into()));
        }
        Ok(self.x_hat.as_vector() - truth.as_vector())
    }
}

/// Outcome of the tube-constraint check `‖A*A(x̂ − x)‖_∞ ≤ (5/4)λσ_m`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TubeDiagnostic {
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Tube constraint diagnostic for a known truth `x`.
pub fn tube_diagnostic(a: &MeasurementMatrix, x_hat: &Signal, x: &Signal, penalty: f64) -> Result<TubeDiagnostic> {
    let am = a.as_real()?;
    if x_hat.len() != am.ncols() || x.len() != am.ncols() {
        return Err(Error::DimensionMismatch("signal lengths must equal the number of columns".into()));
    }
    let h = x_hat.as_vector() - x.as_vector();
    let value = am.tr_mul(&(am * h)).amax();
    let threshold = 1.25 * penalty;
    Ok(TubeDiagnostic { value, threshold, pass: value <= threshold })
}

pub(crate) fn soft_threshold(v: &DVector<f64>, tau: f64) -> DVector<f64> {
    v.map(|t| {
        if t > tau {
            t - tau
        } else if t < -tau {
            t + tau
        } else {
            0.0
        }
    })
}

pub(crate) fn l1(v: &DVector<f64>) -> f64 {
    v.iter().map(|t| t.abs()).sum()
}

pub(crate) fn nonzero_indices(v: &DVector<f64>) -> Vec<usize> {
    (0..v.len()).filter(|&i| v[i] != 0.0).collect()
}

pub(crate) fn scatter(n: usize, idx: &[usize], vals: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (k, &i) in idx.iter().enumerate() {
        out[i] = vals[k];
    }
    out
}

pub(crate) fn real_parts<'a>(
    a: &'a MeasurementMatrix,
    y: &'a MeasurementVector,
) -> Result<(&'a DMatrix<f64>, &'a DVector<f64>)> {
    let am = a.as_real()?;
    let yv = y.as_real()?;
    if yv.len() != am.nrows() {
        return Err(Error::DimensionMismatch(format!("{} measurements for {} rows", yv.len(), am.nrows())));
    }
    Ok((am, yv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn program_parsing() {
        assert_eq!("bp".parse::<Program>().unwrap(), Program::Bp);
        assert_eq!("dantzig".parse::<Program>().unwrap(), Program::Dantzig);
        assert!("omp".parse::<Program>().is_err());
        assert_eq!(serde_json::to_string(&Program::Lasso).unwrap(), "\"lasso\"");
    }

    #[test]
    fn default_lambda_formula() {
        assert!((default_lambda(256) - 10.0 * 256f64.ln().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tube_trivial_and_violated() {
        let a = MeasurementMatrix::from_real(DMatrix::identity(3, 3)).unwrap();
        let x = Signal::from_slice(&[1.0, 0.0, -1.0]).unwrap();
        let d = tube_diagnostic(&a, &x, &x, 0.1).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(d.pass);
        let far = Signal::from_slice(&[5.0, -3.0, 2.0]).unwrap();
        assert!(!tube_diagnostic(&a, &far, &x, 0.1).unwrap().pass);
    }

    #[test]
    fn soft_threshold_values() {
        let v = DVector::from_vec(vec![2.0, -0.5, 0.3, -3.0]);
        assert_eq!(soft_threshold(&v, 1.0).as_slice(), &[1.0, 0.0, 0.0, -2.0]);
    }
}
