use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::EmpiricalReport;
use crate::error::{Error, Result};
use crate::linalg::min_singular_value;
use crate::model::{max_column_norm_of, MeasurementMatrix, SupportSet};
use crate::rng::stream;

pub(crate) fn residual_matrix(am: &DMatrix<f64>, with_projection: bool, t: Option<&SupportSet>) -> Result<DMatrix<f64>> {
    if !with_projection {
        return Ok(am.clone());
    }
    let t = t.ok_or_else(|| Error::InvalidArgument("the projected bound needs a support T".into()))?;
    if t.ambient_dim() != am.ncols() {
        return Err(Error::DimensionMismatch("support must live in dimension n".into()));
    }
    if t.is_empty() {
        return Ok(am.clone());
    }
    let a_t = am.select_columns(t.indices());
    if min_singular_value(&a_t) <= 1e-10 {
        return Err(Error::Precondition("A_T is rank deficient".into()));
    }
    // (I − P)A with P the orthogonal projector onto range(A_T)
    let q = a_t.qr().q();
    Ok(am - &q * q.tr_mul(am))
}

/// `σ·2‖A‖_{1,2}√log n`, or `σ·2‖(I − P)A‖_{1,2}√log n` with `P` the
/// projector onto the range of `A_T` when `with_projection` is set.
///
/// `‖A*z‖_∞` (resp. `‖A*(I − P)z‖_∞`) stays below it with probability at
/// least `1 − 1/(2n)` for `z ~ N(0, σ²I)`.
pub fn noise_correlation_bound(a: &MeasurementMatrix, sigma: f64, with_projection: bool, t: Option<&SupportSet>) -> Result<f64> {
    let am = a.as_real()?;
    let n = am.ncols();
    if n < 2 {
        return Err(Error::InvalidArgument("the bound needs n >= 2".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument("sigma must be finite and >= 0".into()));
    }
    let r = residual_matrix(am, with_projection, t)?;
    Ok(sigma * 2.0 * max_column_norm_of(&r) * (n as f64).ln().sqrt())
}

/// `‖((I − P)A)*z‖_∞` for the draw `z` on stream `(seed, k)`.
pub(crate) fn noise_statistic(r: &DMatrix<f64>, sigma: f64, seed: u64, k: u64) -> f64 {
    let mut rng = stream(seed, &[k]);
    let z = DVector::from_fn(r.nrows(), |_, _| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
    // (I − P) is symmetric, so A*(I − P)z = ((I − P)A)*z
    r.tr_mul(&z).amax()
}

/// Frequency with which `‖A*(I − P)z‖_∞` exceeds [`noise_correlation_bound`]
/// over `trials` Gaussian draws, against the bound `1/(2n)`.
pub fn noise_exceedance(
    a: &MeasurementMatrix,
    sigma: f64,
    with_projection: bool,
    t: Option<&SupportSet>,
    trials: usize,
    seed: u64,
) -> Result<EmpiricalReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let threshold = noise_correlation_bound(a, sigma, with_projection, t)?;
    let am = a.as_real()?;
    let r = residual_matrix(am, with_projection, t)?;
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&k| noise_statistic(&r, sigma, seed, k) > threshold)
        .count();
    Ok(EmpiricalReport::from_counts(hits, trials, 1.0 / (2.0 * am.ncols() as f64)))
}
