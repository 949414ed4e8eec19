use nalgebra::{DMatrix, DVector};

use super::{l1, nonzero_indices, real_parts, scatter, soft_threshold, Program, SolverOptions, SolverResult};
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::model::{MeasurementMatrix, MeasurementVector, Signal};

const CHECK_EVERY: usize = 10;

/// Best of `±μ` for the dual `max bᵀμ − δ‖μ‖₁ s.t. ‖Gμ‖_∞ ≤ 1`, after
/// scaling into the feasible set. Never below the trivial value 0.
fn dual_value(g: &DMatrix<f64>, b: &DVector<f64>, delta: f64, mu: &DVector<f64>) -> f64 {
    let c = (g * mu).amax();
    if c == 0.0 {
        return 0.0;
    }
    let raw = b.dot(mu);
    let l1mu = l1(mu);
    let scale = c.max(1.0);
    [(raw - delta * l1mu) / scale, (-raw - delta * l1mu) / scale, 0.0].into_iter().fold(f64::MIN, f64::max)
}

fn rel_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual).max(0.0) / primal.abs().max(1.0)
}

/// `min ‖x‖₁ s.t. ‖A*(Ax − y)‖_∞ ≤ delta` for real `A`, with
/// `delta = λσ_m`.
///
/// The constraint set always contains the least-squares solutions, so the
/// program is feasible for every `delta ≥ 0`.
pub fn dantzig(a: &MeasurementMatrix, y: &MeasurementVector, delta: f64, opts: &SolverOptions) -> Result<SolverResult> {
    let (am, yv) = real_parts(a, y)?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidArgument("delta must be finite and >= 0".into()));
    }
    let n = am.ncols();
    let g = am.tr_mul(am);
    let b = am.tr_mul(yv);
    let bmax = b.amax();
    let feas_tol = opts.abs_tol * (1.0 + bmax);
    let excess = |x: &DVector<f64>| ((&g * x - &b).amax() - delta).max(0.0);

    let finish = |x: DVector<f64>, iterations: usize, dual: f64, polished: bool, trace: Vec<f64>| -> Result<SolverResult> {
        let objective = l1(&x);
        let gap = rel_gap(objective, dual);
        let feasibility = excess(&x);
        Ok(SolverResult {
            program: Program::Dantzig,
            tube_value: (&g * &x - &b).amax(),
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

    if bmax <= delta {
        return finish(DVector::zeros(n), 0, 0.0, false, Vec::new());
    }

    // Exact solve on support S with active constraints K, dual on K.
    let try_polish = |z: &DVector<f64>, u: &DVector<f64>| -> Option<(DVector<f64>, f64)> {
        let support = nonzero_indices(z);
        let active: Vec<usize> = (0..n).filter(|&i| delta == 0.0 || u[i].abs() >= delta).collect();
        if support.is_empty() || active.len() < support.len() {
            return None;
        }
        let g_ks = DMatrix::from_fn(active.len(), support.len(), |r, c| g[(active[r], support[c])]);
        let rhs = DVector::from_fn(active.len(), |r, _| b[active[r]] + delta * u[active[r]].signum());
        let x_s = lstsq(&g_ks, &rhs);
        let x = scatter(n, &support, &x_s);
        if excess(&x) > feas_tol {
            return None;
        }
        let sgn = DVector::from_fn(support.len(), |k, _| x_s[k].signum());
        let mu_k = lstsq(&g_ks.transpose(), &sgn);
        let mu = scatter(n, &active, &mu_k);
        Some((x, dual_value(&g, &b, delta, &mu)))
    };

    let system = (DMatrix::identity(n, n) + &g * &g)
        .cholesky()
        .ok_or_else(|| Error::Precondition("I + G² is not positive definite".into()))?;
    let mut rho = 1.0;
    let mut z = DVector::zeros(n);
    let mut u = DVector::zeros(n);
    let mut d1 = DVector::zeros(n);
    let mut d2 = DVector::zeros(n);
    let mut x = DVector::zeros(n);
    let mut trace = Vec::new();
    for iter in 1..=opts.max_iters {
        x = system.solve(&(&z - &d1 + &g * (&b + &u - &d2)));
        let gx = &g * &x - &b;
        let z_old = z.clone();
        let u_old = u.clone();
        z = soft_threshold(&(&x + &d1), 1.0 / rho);
        u = (&gx + &d2).map(|t| t.clamp(-delta, delta));
        d1 += &x - &z;
        d2 += &gx - &u;

        if iter % CHECK_EVERY != 0 {
            continue;
        }
        let objective = l1(&x);
        trace.push(objective);
        let dual = dual_value(&g, &b, delta, &(&d2 * rho));
        if opts.polish {
            if let Some((xp, dp)) = try_polish(&z, &u) {
                if rel_gap(l1(&xp), dp) <= opts.rel_tol {
                    return finish(xp, iter, dp, true, trace);
                }
            }
        }
        if rel_gap(objective, dual) <= opts.rel_tol && excess(&x) <= feas_tol {
            return finish(x, iter, dual, false, trace);
        }
        let r = ((&x - &z).norm_squared() + (&gx - &u).norm_squared()).sqrt();
        let s = rho * ((&z - &z_old).norm_squared() + (&g * (&u - &u_old)).norm_squared()).sqrt();
        if r > 10.0 * s {
            rho *= 2.0;
            d1 /= 2.0;
            d2 /= 2.0;
        } else if s > 10.0 * r {
            rho /= 2.0;
            d1 *= 2.0;
            d2 *= 2.0;
        }
    }
    let dual = dual_value(&g, &b, delta, &(&d2 * rho));
    finish(x, opts.max_iters, dual, false, trace)
}
