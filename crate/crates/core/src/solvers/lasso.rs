use nalgebra::{DMatrix, DVector};

use super::{l1, nonzero_indices, real_parts, scatter, soft_threshold, Program, SolverOptions, SolverResult};
use crate::error::{Error, Result};
use crate::linalg::operator_norm;
use crate::model::{sign, MeasurementMatrix, MeasurementVector, Signal};

/// Absolute tolerance on the subgradient conditions.
pub const KKT_TOL: f64 = 1e-8;
const CHECK_EVERY: usize = 10;
const POLISH_EVERY: usize = 20;

struct Design<'a> {
    a: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    aty: DVector<f64>,
    gram: Option<DMatrix<f64>>,
    penalty: f64,
}

impl Design<'_> {
    /// `A*(Ax − y)`.
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.gram {
            Some(g) => g * x - &self.aty,
            None => self.a.tr_mul(&(self.a * x - self.y)),
        }
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (self.a * x - self.y).norm_squared() + self.penalty * l1(x)
    }

    /// Largest violation of `A*(y − Ax) ∈ penalty·∂‖x‖₁`.
    fn kkt(&self, x: &DVector<f64>) -> f64 {
        let corr = -self.gradient(x);
        (0..x.len())
            .map(|i| {
                if x[i] != 0.0 {
                    (corr[i] - self.penalty * sign(x[i])).abs()
                } else {
                    (corr[i].abs() - self.penalty).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Exact solution on the support and sign pattern of `x`, if it keeps
    /// those signs.
    fn polish(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let support = nonzero_indices(x);
        if support.is_empty() || support.len() > self.a.nrows() {
            return None;
        }
        let a_s = self.a.select_columns(&support);
        let signs = DVector::from_fn(support.len(), |k, _| sign(x[support[k]]));
        let rhs = a_s.tr_mul(self.y) - &signs * self.penalty;
        let x_s = a_s.tr_mul(&a_s).cholesky()?.solve(&rhs);
        if (0..support.len()).any(|k| sign(x_s[k]) != signs[k]) {
            return None;
        }
        Some(scatter(x.len(), &support, &x_s))
    }
}

/// `min ½‖Ax − y‖₂² + penalty·‖x‖₁` for real `A`, where `penalty = λσ_m`.
pub fn lasso(a: &MeasurementMatrix, y: &MeasurementVector, penalty: f64, opts: &SolverOptions) -> Result<SolverResult> {
    let (am, yv) = real_parts(a, y)?;
    if !(penalty.is_finite() && penalty >= 0.0) {
        return Err(Error::InvalidArgument("penalty must be finite and >= 0".into()));
    }
    let n = am.ncols();
    let design = Design {
        a: am,
        y: yv,
        aty: am.tr_mul(yv),
        gram: (am.nrows() >= n).then(|| am.tr_mul(am)),
        penalty,
    };

    let finish = |x: DVector<f64>, iterations: usize, polished: bool, trace: Vec<f64>| -> Result<SolverResult> {
        let kkt = design.kkt(&x);
        Ok(SolverResult {
            program: Program::Lasso,
            tube_value: design.gradient(&x).amax(),
            objective: design.objective(&x),
            x_hat: Signal::new(x)?,
            iterations,
            kkt_residual: kkt,
            tolerance: KKT_TOL,
            feasibility: 0.0,
            dual_objective: None,
            converged: kkt <= KKT_TOL,
            polished,
            objective_trace: trace,
        })
    };

    if penalty >= design.aty.amax() {
        return finish(DVector::zeros(n), 0, false, Vec::new());
    }
    let lipschitz = operator_norm(am).powi(2);
    if lipschitz == 0.0 {
        return finish(DVector::zeros(n), 0, false, Vec::new());
    }
    let step = 1.0 / lipschitz;

    let mut x = DVector::zeros(n);
    let mut f_x = design.objective(&x);
    let mut point = x.clone();
    let mut t = 1.0f64;
    let mut trace = vec![f_x];
    for iter in 1..=opts.max_iters {
        let candidate = soft_threshold(&(&point - design.gradient(&point) * step), penalty * step);
        let f_c = design.objective(&candidate);
        if f_c > f_x {
            // function-value restart: drop momentum, retake the step from x
            t = 1.0;
            point = x.clone();
            trace.push(f_x);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            point = &candidate + (&candidate - &x) * ((t - 1.0) / t_next);
            x = candidate;
            f_x = f_c;
            t = t_next;
        }

        if opts.polish && iter % POLISH_EVERY == 0 {
            if let Some(xp) = design.polish(&x) {
                if design.kkt(&xp) <= KKT_TOL {
                    trace.push(f_x);
                    return finish(xp, iter, true, trace);
                }
            }
        }
        if iter % CHECK_EVERY == 0 {
            trace.push(f_x);
            if design.kkt(&x) <= KKT_TOL {
                return finish(x, iter, false, trace);
            }
        }
    }
    finish(x, opts.max_iters, false, trace)
}
