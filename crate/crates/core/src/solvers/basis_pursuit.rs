use nalgebra::{DMatrix, DVector};

use super::{l1, nonzero_indices, real_parts, scatter, soft_threshold, Program, SolverOptions, SolverResult};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, min_singular_value};
use crate::model::{sign, MeasurementMatrix, MeasurementVector, Signal};

const CHECK_EVERY: usize = 10;

/// Thin SVD pieces of `A` restricted to its numerical rank.
struct RangeFactors {
    u: DMatrix<f64>,
    s_inv: DVector<f64>,
    v: DMatrix<f64>,
}

impl RangeFactors {
    fn new(a: &DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let svd = crate::linalg::svd(a);
        let u_full = svd.u.expect("u requested");
        let vt_full = svd.v_t.expect("v_t requested");
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let eps = smax * (m.max(n) as f64) * f64::EPSILON;
        let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > eps).collect();
        let r = keep.len();
        RangeFactors {
            u: DMatrix::from_fn(m, r, |i, k| u_full[(i, keep[k])]),
            s_inv: DVector::from_fn(r, |k, _| 1.0 / svd.singular_values[keep[k]]),
            v: DMatrix::from_fn(n, r, |j, k| vt_full[(keep[k], j)]),
        }
    }

    fn rank(&self) -> usize {
        self.s_inv.len()
    }

    /// `A⁺ y`.
    fn pinv(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.v * (self.u.tr_mul(y).component_mul(&self.s_inv))
    }

    /// Least-squares `ν` for `A*ν = w`.
    fn dual_from(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.u * (self.v.tr_mul(w).component_mul(&self.s_inv))
    }

    /// Orthogonal projection onto the null space of `A`.
    fn null_project(&self, v: &DVector<f64>) -> DVector<f64> {
        v - &self.v * self.v.tr_mul(v)
    }
}

/// Dual objective `yᵀν` after scaling `ν` into `‖A*ν‖_∞ ≤ 1`.
fn scaled_dual(a: &DMatrix<f64>, y: &DVector<f64>, nu: &DVector<f64>) -> f64 {
    let c = a.tr_mul(nu).amax();
    if c == 0.0 {
        0.0
    } else {
        y.dot(nu) / c.max(1.0)
    }
}

fn rel_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual).max(0.0) / primal.abs().max(1.0)
}

/// `min ‖x‖₁ s.t. Ax = y` for real `A`.
///
/// Errors with [`Error::Infeasible`] when `y` is not in the range of `A`.
pub fn basis_pursuit(a: &MeasurementMatrix, y: &MeasurementVector, opts: &SolverOptions) -> Result<SolverResult> {
    let (am, yv) = real_parts(a, y)?;
    let n = am.ncols();
    let ynorm = yv.norm();
    let feas_tol = opts.abs_tol * (1.0 + ynorm);

    let finish = |x: DVector<f64>, iterations: usize, dual: f64, polished: bool, trace: Vec<f64>| -> Result<SolverResult> {
        let residual = am * &x - yv;
        let objective = l1(&x);
        let gap = rel_gap(objective, dual);
        let feasibility = residual.norm();
        Ok(SolverResult {
            program: Program::Bp,
            tube_value: am.tr_mul(&residual).amax(),
            x_hat: Signal::new(x)?,
            iterations,
            kkt_residual: gap,
            tolerance: opts.rel_tol,
            feasibility,
            objective,
            dual_objective: Some(dual),
            converged: feasibility <= feas_tol && gap <= opts.rel_tol,
            polished,
            objective_trace: trace,
        })
    };

    if ynorm == 0.0 {
        return finish(DVector::zeros(n), 0, 0.0, false, Vec::new());
    }

    let factors = RangeFactors::new(am);
    let x_ls = factors.pinv(yv);
    if (am * &x_ls - yv).norm() > 1e-8 * (1.0 + ynorm) {
        return Err(Error::Infeasible("measurements are not in the range of A".into()));
    }
    let project = |v: &DVector<f64>| factors.null_project(v) + &x_ls;

    let try_polish = |z: &DVector<f64>, w: &DVector<f64>| -> Option<(DVector<f64>, f64)> {
        let support = nonzero_indices(z);
        if support.is_empty() || support.len() > factors.rank() {
            return None;
        }
        let a_s = am.select_columns(&support);
        if min_singular_value(&a_s) <= 1e-10 {
            return None;
        }
        let x_s = lstsq(&a_s, yv);
        if (&a_s * &x_s - yv).norm() > feas_tol {
            return None;
        }
        let sgn_s = x_s.map(sign);
        // move the ADMM dual estimate onto {ν : A_S*ν = sgn(x_S)}
        let nu0 = factors.dual_from(w);
        let correction = lstsq(&a_s.transpose(), &(&sgn_s - a_s.tr_mul(&nu0)));
        let nu = nu0 + correction;
        Some((scatter(n, &support, &x_s), scaled_dual(am, yv, &nu)))
    };

    let mut rho = 1.0;
    let mut z = DVector::zeros(n);
    let mut u = DVector::zeros(n);
    let mut x = x_ls.clone();
    let mut trace = Vec::new();
    for iter in 1..=opts.max_iters {
        x = project(&(&z - &u));
        let z_old = z.clone();
        z = soft_threshold(&(&x + &u), 1.0 / rho);
        u += &x - &z;

        if iter % CHECK_EVERY != 0 {
            continue;
        }
        let r = (&x - &z).norm();
        let s = rho * (&z - &z_old).norm();
        let w = &u * rho;
        let dual = scaled_dual(am, yv, &factors.dual_from(&w));
        let objective = l1(&x);
        trace.push(objective);
        if opts.polish {
            if let Some((xp, dp)) = try_polish(&z, &w) {
                if rel_gap(l1(&xp), dp) <= opts.rel_tol {
                    return finish(xp, iter, dp, true, trace);
                }
            }
        }
        if rel_gap(objective, dual) <= opts.rel_tol && (am * &x - yv).norm() <= feas_tol {
            return finish(x, iter, dual, false, trace);
        }
        // residual balancing; the projection does not depend on rho
        if r > 10.0 * s {
            rho *= 2.0;
            u /= 2.0;
        } else if s > 10.0 * r {
            rho /= 2.0;
            u *= 2.0;
        }
    }
    let w = &u * rho;
    let dual = scaled_dual(am, yv, &factors.dual_from(&w));
    finish(x, opts.max_iters, dual, false, trace)
}
