//! Dense linear-algebra helpers shared by the solvers, certificates and
//! estimate validators.

use nalgebra::{ComplexField, DMatrix, DVector, Dyn, SVD};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;
const SVD_DIM_LIMIT: usize = 64;

/// Largest singular value `‖M‖`.
///
/// Matrices whose smaller side is at most 64 go straight to a full SVD.
/// Larger ones use power iteration on `M*M` to relative tolerance 1e-10 and
/// fall back to the SVD if it stalls.
pub fn operator_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    if r.min(c) <= SVD_DIM_LIMIT {
        return svd_norm(m);
    }
    power_norm(m).unwrap_or_else(|| svd_norm(m))
}

fn svd_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Power iteration on `M*M`; `None` if it has not settled within the budget.
pub fn power_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Option<f64> {
    let c = m.ncols();
    // deterministic, generic start vector
    let mut v = DVector::<T>::from_fn(c, |i, _| T::from_real(1.0 + (i as f64 * 0.618_033_988_75).fract()));
    let nv = v.norm();
    v.unscale_mut(nv);
    let mut prev = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = m.ad_mul(&(m * &v));
        let lambda = w.norm();
        if lambda == 0.0 {
            return Some(0.0);
        }
        v = w.unscale(lambda);
        if (lambda - prev).abs() <= POWER_TOL * lambda {
            return Some(lambda.sqrt());
        }
        prev = lambda;
    }
    None
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues<T: ComplexField<RealField = f64>>(h: &DMatrix<T>) -> Vec<f64> {
    if h.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `‖H − I‖` for Hermitian `H`, via its extreme eigenvalues.
pub fn deviation_from_identity<T: ComplexField<RealField = f64>>(h: &DMatrix<T>) -> f64 {
    let ev = hermitian_eigenvalues(h);
    match (ev.first(), ev.last()) {
        (Some(lo), Some(hi)) => (1.0 - lo).max(hi - 1.0),
        _ => 0.0,
    }
}

/// Smallest singular value of a tall matrix (0 for an empty one).
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.ncols() == 0 {
        return f64::INFINITY;
    }
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Thin SVD restricted to the numerically nonzero singular values.
///
/// Backed by faer: nalgebra's SVD can return inaccurate factors for inputs
/// with many repeated or zero singular values, which subsampled Fourier
/// matrices with duplicated rows produce routinely.
pub fn svd(m: &DMatrix<f64>) -> SVD<f64, Dyn, Dyn> {
    let (rows, cols) = m.shape();
    let empty = || SVD { u: Some(DMatrix::zeros(rows, 0)), v_t: Some(DMatrix::zeros(0, cols)), singular_values: DVector::zeros(0) };
    if rows == 0 || cols == 0 {
        return empty();
    }
    let f = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let Ok(dec) = f.thin_svd() else {
        return m.clone().svd(true, true);
    };
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    let top = (0..s.nrows()).map(|i| s[i]).fold(0.0, f64::max);
    let tol = top * (rows.max(cols) as f64) * f64::EPSILON;
    let keep: Vec<usize> = (0..s.nrows()).filter(|&i| s[i] > tol).collect();
    if keep.is_empty() {
        return empty();
    }
    SVD {
        u: Some(DMatrix::from_fn(rows, keep.len(), |i, k| u[(i, keep[k])])),
        v_t: Some(DMatrix::from_fn(keep.len(), cols, |k, j| v[(j, keep[k])])),
        singular_values: DVector::from_fn(keep.len(), |k, _| s[keep[k]]),
    }
}

/// Minimum-norm least-squares solution of `m x ≈ b`.
pub fn lstsq(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if m.ncols() == 0 {
        return DVector::zeros(0);
    }
    if m.nrows() == 0 {
        return DVector::zeros(m.ncols());
    }
    let svd = svd(m);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(m.ncols()))
}

/// Row-space basis of `m` (orthonormal columns of `V` for nonzero singular
/// values) and the pseudo-inverse applied to `b`.
pub fn row_space_and_pinv(m: &DMatrix<f64>, b: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let svd = svd(m);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > eps)
        .collect();
    let basis = DMatrix::from_fn(m.ncols(), keep.len(), |r, c| v_t[(keep[c], r)]);
    let x = svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(m.ncols()));
    (basis, x)
}
