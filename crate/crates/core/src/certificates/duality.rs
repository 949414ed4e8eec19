use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::DualCertificate;
use crate::error::{Error, Result};
use crate::linalg::{lstsq, min_singular_value, operator_norm};
use crate::model::{sign, MeasurementMatrix, Signal, SupportSet};

/// Tolerance for the equality conditions of exact duality.
pub const EXACT_TOL: f64 = 1e-8;
/// Smallest singular value of `A_T` below which `A_T` counts as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// One checked condition: `value` against `threshold`, `margin = threshold − value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub value: f64,
    pub threshold: f64,
    pub margin: f64,
    pub pass: bool,
}

impl Condition {
    fn at_most(value: f64, threshold: f64) -> Self {
        Condition { value, threshold, margin: threshold - value, pass: value <= threshold }
    }

    fn below(value: f64, threshold: f64) -> Self {
        Condition { value, threshold, margin: threshold - value, pass: value < threshold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactDualityReport {
    /// Least-squares residual of `A*w = v`.
    pub row_space: Condition,
    /// `max |v_T − sgn(x_T)|`.
    pub on_support: Condition,
    /// `‖v_{T^c}‖_∞ < 1`.
    pub off_support: Condition,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InexactDualityReport {
    /// `‖(A_T*A_T)⁻¹‖ ≤ 2`.
    pub gram_inverse: Condition,
    /// `max_{i∈T^c} ‖A_T*a_i‖₂ ≤ 1`.
    pub off_support_columns: Condition,
    /// `‖v_T − sgn(x_T)‖₂ ≤ 1/4`.
    pub on_support: Condition,
    /// `‖v_{T^c}‖_∞ ≤ 1/4`.
    pub off_support: Condition,
    pub pass: bool,
}

fn check_inputs(v: &DVector<f64>, am: &DMatrix<f64>, t: &SupportSet, x: &Signal) -> Result<()> {
    let n = am.ncols();
    if v.len() != n || x.len() != n || t.ambient_dim() != n {
        return Err(Error::DimensionMismatch("v, x and T must match the number of columns".into()));
    }
    Ok(())
}

fn split(v: &DVector<f64>, t: &SupportSet, x: &Signal) -> (DVector<f64>, f64) {
    let idx = t.indices();
    let diff = DVector::from_fn(idx.len(), |k, _| v[idx[k]] - sign(x.as_vector()[idx[k]]));
    let off = (0..v.len()).filter(|&i| !t.contains(i)).map(|i| v[i].abs()).fold(0.0, f64::max);
    (diff, off)
}

/// Exact duality: `v` in the row space of `A`, `v_T = sgn(x_T)` and
/// `‖v_{T^c}‖_∞ < 1`.
///
/// Errors with [`Error::Precondition`] when `A_T` is rank deficient.
pub fn verify_exact_duality(v: &DVector<f64>, a: &MeasurementMatrix, t: &SupportSet, x: &Signal) -> Result<ExactDualityReport> {
    let am = a.as_real()?;
    check_inputs(v, am, t, x)?;
    let a_t = am.select_columns(t.indices());
    let smin = min_singular_value(&a_t);
    if smin <= RANK_TOL {
        return Err(Error::Precondition(format!("A_T is rank deficient (smallest singular value {smin:e})")));
    }
    let w = lstsq(&am.transpose(), v);
    let row_space = Condition::at_most((am.tr_mul(&w) - v).norm(), EXACT_TOL);
    let (diff, off) = split(v, t, x);
    let on_support = Condition::at_most(diff.amax(), EXACT_TOL);
    let off_support = Condition::below(off, 1.0);
    Ok(ExactDualityReport { row_space, on_support, off_support, pass: row_space.pass && on_support.pass && off_support.pass })
}

/// The four inexact-duality conditions for `v` (typically a golfing
/// certificate's `v`).
pub fn verify_inexact_duality(v: &DVector<f64>, a: &MeasurementMatrix, t: &SupportSet, x: &Signal) -> Result<InexactDualityReport> {
    let am = a.as_real()?;
    check_inputs(v, am, t, x)?;
    let a_t = am.select_columns(t.indices());
    let smin = if t.is_empty() { f64::INFINITY } else { min_singular_value(&a_t) };
    let inv_norm = if smin > 0.0 { 1.0 / (smin * smin) } else { f64::INFINITY };
    let gram_inverse = Condition::at_most(inv_norm, 2.0);
    let cols = (0..am.ncols())
        .filter(|&i| !t.contains(i))
        .map(|i| a_t.tr_mul(&am.column(i)).norm())
        .fold(0.0, f64::max);
    let off_support_columns = Condition::at_most(cols, 1.0);
    let (diff, off) = split(v, t, x);
    let on_support = Condition::at_most(diff.norm(), 0.25);
    let off_support = Condition::at_most(off, 0.25);
    Ok(InexactDualityReport {
        gram_inverse,
        off_support_columns,
        on_support,
        off_support,
        pass: gram_inverse.pass && off_support_columns.pass && on_support.pass && off_support.pass,
    })
}

/// `‖w‖₂/√s` against `c0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WNormCheck {
    pub ratio: f64,
    pub c0: f64,
    pub pass: bool,
}

pub const DEFAULT_C0: f64 = 10.0;

pub fn certificate_w_norm_check(cert: &DualCertificate, s: usize, c0: f64) -> Result<WNormCheck> {
    if !cert.success {
        return Err(Error::Precondition("the certificate construction did not succeed".into()));
    }
    if s == 0 {
        return Err(Error::InvalidArgument("s must be >= 1".into()));
    }
    let ratio = cert.w.norm() / (s as f64).sqrt();
    Ok(WNormCheck { ratio, c0, pass: ratio <= c0 })
}

/// The least-squares exact certificate `v = A*A_T(A_T*A_T)⁻¹sgn(x_T)`.
pub fn least_squares_certificate(a: &MeasurementMatrix, t: &SupportSet, x: &Signal) -> Result<DVector<f64>> {
    let am = a.as_real()?;
    let target = DVector::from_fn(t.len(), |k, _| sign(x.as_vector()[t.indices()[k]]));
    correction(am, t, &target)
}

/// Adds the least-squares correction on `T` that makes `v_T = sgn(x_T)`
/// exactly, staying in the row space of `A`.
pub fn tighten_to_exact(v: &DVector<f64>, a: &MeasurementMatrix, t: &SupportSet, x: &Signal) -> Result<DVector<f64>> {
    let am = a.as_real()?;
    check_inputs(v, am, t, x)?;
    let (diff, _) = split(v, t, x);
    Ok(v - correction(am, t, &diff)?)
}

/// `A*A_T(A_T*A_T)⁻¹ r`, whose restriction to `T` is `r`.
fn correction(am: &DMatrix<f64>, t: &SupportSet, r: &DVector<f64>) -> Result<DVector<f64>> {
    if t.ambient_dim() != am.ncols() {
        return Err(Error::DimensionMismatch("support dimension must equal the number of columns".into()));
    }
    let a_t = am.select_columns(t.indices());
    if min_singular_value(&a_t) <= RANK_TOL {
        return Err(Error::Precondition("A_T is rank deficient".into()));
    }
    let coef = (a_t.tr_mul(&a_t))
        .cholesky()
        .ok_or_else(|| Error::Precondition("A_T*A_T is not positive definite".into()))?
        .solve(r);
    Ok(am.tr_mul(&(&a_t * coef)))
}

/// `‖(A_T*A_T)⁻¹‖`, the first inexact-duality precondition.
pub fn gram_inverse_norm(a: &MeasurementMatrix, t: &SupportSet) -> Result<f64> {
    let am = a.as_real()?;
    let a_t = am.select_columns(t.indices());
    let gram = a_t.tr_mul(&a_t);
    let inv = gram.try_inverse().ok_or_else(|| Error::Precondition("A_T*A_T is singular".into()))?;
    Ok(operator_norm(&inv))
}
