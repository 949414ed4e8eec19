//! Library side of the `solve`, `certify` and `estimate` commands.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde_json::{json, Value};

use super::config::{CertificateOptions, ExperimentConfig, ExperimentKind, Grid, SweepEvent, SweepOptions};
use super::runners::{build_cells, certificate_trial, CertificateTrial};
use super::signals::SignalModel;
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};
use crate::model::{realify, Entries, MeasurementMatrix, MeasurementVector, Signal, VectorEntries, C64};
use crate::solvers::{tube_diagnostic, Program, RecoveryProblem, SolverOptions};

/// A recovery instance on disk. Complex data give `a_im`/`y_im` and are
/// realified before solving.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub a_im: Option<Vec<Vec<f64>>>,
    pub y: Vec<f64>,
    #[serde(default)]
    pub y_im: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma_m: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Ground truth, when known, for error and tube diagnostics.
    #[serde(default)]
    pub x: Option<Vec<f64>>,
}

fn dense(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("matrix must be a nonempty list of equal-length rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl ProblemFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// The realified problem plus the truth, with `lambda` overriding the file.
    pub fn into_problem(self, lambda: Option<f64>) -> Result<(RecoveryProblem, Option<Signal>)> {
        let re = dense(&self.a)?;
        let (a, y) = match (&self.a_im, &self.y_im) {
            (None, None) => (
                MeasurementMatrix::from_real(re)?,
                MeasurementVector::new(VectorEntries::Real(DVector::from_vec(self.y.clone())), self.sigma_m)?,
            ),
            (im_a, im_y) => {
                let im = match im_a {
                    Some(rows) => dense(rows)?,
                    None => DMatrix::zeros(re.nrows(), re.ncols()),
                };
                if im.shape() != re.shape() {
                    return Err(Error::DimensionMismatch("a_im must match a".into()));
                }
                let yi = im_y.clone().unwrap_or_else(|| vec![0.0; self.y.len()]);
                if yi.len() != self.y.len() {
                    return Err(Error::DimensionMismatch("y_im must match y".into()));
                }
                let ac = DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]));
                let yc = DVector::from_fn(self.y.len(), |k, _| C64::new(self.y[k], yi[k]));
                let a = MeasurementMatrix::new(Entries::Complex(ac), 1.0, None)?;
                realify(&a, &MeasurementVector::new(VectorEntries::Complex(yc), self.sigma_m)?)?
            }
        };
        let x = self.x.as_deref().map(Signal::from_slice).transpose()?;
        Ok((RecoveryProblem::new(a, y, lambda.or(self.lambda))?, x))
    }
}

/// Solves `file` and returns the result with its diagnostics as JSON.
pub fn solve_report(file: ProblemFile, program: Program, lambda: Option<f64>, tol: Option<f64>) -> Result<Value> {
    let (problem, x) = file.into_problem(lambda)?;
    let mut opts = SolverOptions::default();
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument("tol must be finite and > 0".into()));
        }
        opts.rel_tol = t;
    }
    let r = problem.solve(program, &opts)?;
    let mut out = json!({
        "lambda": problem.lambda(),
        "sigma_m": problem.sigma_m(),
        "penalty": problem.penalty(),
        "result": r,
    });
    if let Some(x) = x {
        let e = r.error_vector(&x)?;
        out["l2_error"] = json!(e.norm());
        out["l1_error"] = json!(e.iter().map(|v| v.abs()).sum::<f64>());
        out["tube"] = serde_json::to_value(tube_diagnostic(problem.matrix(), &r.x_hat, &x, problem.penalty())?)?;
    }
    Ok(out)
}

/// `trials` golfing runs at one `(n, s, m)`, trial `j` on `stream(seed, [0, j])`.
pub fn certify_trials(ensemble: &EnsembleSpec, n: usize, s: usize, m: usize, trials: usize, seed: u64) -> Result<Vec<CertificateTrial>> {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::CertificateRate,
        ensemble: Some(ensemble.to_json()),
        ensembles: Vec::new(),
        grid: Grid { n: vec![n], s: vec![s], m: vec![m], sigma: vec![0.0] },
        trials,
        seed,
        output: None,
        program: Program::Bp,
        compare: Vec::new(),
        signal: SignalModel::Sign,
        lambda: None,
        beta: None,
        solver: SolverOptions::default(),
        estimate: SweepOptions::default(),
        golfing: CertificateOptions::default(),
    };
    let cells = build_cells(&cfg)?;
    (0..trials).map(|j| certificate_trial(&cfg, &cells[0], j)).collect()
}

/// Grid file of the `estimate` command.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateGrid {
    #[serde(default)]
    pub ensemble: Option<Value>,
    #[serde(default)]
    pub ensembles: Vec<Value>,
    pub n: Vec<usize>,
    pub s: Vec<usize>,
    pub m: Vec<usize>,
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    #[serde(default)]
    pub level: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub rip_r: Option<usize>,
    #[serde(default)]
    pub rip_delta: Option<f64>,
    #[serde(default)]
    pub rip_budget: Option<usize>,
    #[serde(default)]
    pub with_projection: bool,
}

/// The estimate-sweep config equivalent to `estimate --which … --grid …`.
pub fn estimate_config(which: SweepEvent, grid: EstimateGrid, trials: usize, seed: u64) -> Result<ExperimentConfig> {
    let d = SweepOptions::default();
    let estimate = SweepOptions {
        which: vec![which],
        level: grid.level.unwrap_or(d.level),
        mu: grid.mu,
        rip_r: grid.rip_r.unwrap_or(d.rip_r),
        rip_delta: grid.rip_delta.unwrap_or(d.rip_delta),
        rip_budget: grid.rip_budget.unwrap_or(d.rip_budget),
        with_projection: grid.with_projection,
    };
    let cfg = ExperimentConfig {
        kind: ExperimentKind::EstimateSweep,
        ensemble: grid.ensemble,
        ensembles: grid.ensembles,
        grid: Grid { n: grid.n, s: grid.s, m: grid.m, sigma: grid.sigma.unwrap_or_else(|| vec![0.0]) },
        trials,
        seed,
        output: None,
        program: Program::Bp,
        compare: Vec::new(),
        signal: SignalModel::Sign,
        lambda: None,
        beta: None,
        solver: SolverOptions::default(),
        estimate,
        golfing: CertificateOptions::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_identity_problem() {
        let file: ProblemFile = serde_json::from_str(r#"{"a": [[1, 0], [0, 1]], "y": [2, -1], "x": [2, -1]}"#).unwrap();
        let out = solve_report(file, Program::Bp, None, None).unwrap();
        assert!(out["l2_error"].as_f64().unwrap() < 1e-9);
        assert!(out["result"]["converged"].as_bool().unwrap());
    }

    #[test]
    fn complex_problem_is_realified() {
        let file: ProblemFile =
            serde_json::from_str(r#"{"a": [[1, 0]], "a_im": [[0, 1]], "y": [3], "y_im": [-2], "x": [3, -2]}"#).unwrap();
        let (p, _) = file.into_problem(None).unwrap();
        assert_eq!(p.matrix().nrows(), 2);
        let bad: ProblemFile = serde_json::from_str(r#"{"a": [[1, 0], [1]], "y": [1, 2]}"#).unwrap();
        assert!(bad.into_problem(None).is_err());
    }

    #[test]
    fn certify_and_estimate_helpers() {
        let spec = EnsembleSpec::gaussian(16, 0).unwrap();
        let runs = certify_trials(&spec, 16, 1, 300, 3, 1).unwrap();
        assert_eq!(runs.len(), 3);
        let grid: EstimateGrid = serde_json::from_str(
            r#"{"ensemble": {"family": "binary", "n": 8}, "n": [8], "s": [1], "m": [4, 8], "level": 0.5}"#,
        )
        .unwrap();
        let cfg = estimate_config(SweepEvent::E1, grid, 20, 0).unwrap();
        assert_eq!(build_cells(&cfg).unwrap().len(), 2);
    }
}
