use std::time::Instant;

use nalgebra::DVector;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind, SweepEvent};
use crate::certificates::{golfing_scheme, verify_inexact_duality, GolfingConfig};
use crate::ensembles::{build_matrix, deterministic_coherence, stochastic_coherence, EnsembleSpec, Family, TailModel};
use crate::error::{Error, Result};
use crate::estimates::noise::{noise_statistic, residual_matrix};
use crate::estimates::{
    empirical_estimate, noise_correlation_bound, noise_exceedance, tail_bound, weak_rip_empirical, EmpiricalReport,
    EventQuery, RipMode, TailBoundQuery,
};
use crate::model::{realify, Field, MeasurementMatrix, MeasurementVector, Signal, SupportSet, VectorEntries, C64};
use crate::rng::{derive_key, stream, Rng};
use crate::solvers::{basis_pursuit, l1_error_bound, l2_error_bound, ErrorBoundInputs, Program, RecoveryProblem};

/// Relative ℓ₂ error below which a noiseless recovery counts as exact.
pub const SUCCESS_TOL: f64 = 1e-5;

/// Stream index reserved for per-cell setup draws (support, fixed vectors).
const SETUP_STREAM: u64 = u64::MAX;

/// One point of the experiment grid.
#[derive(Debug, Clone)]
pub struct Cell {
    pub index: usize,
    pub family: String,
    /// The error when the ensemble cannot be instantiated at this `n`.
    pub ensemble: std::result::Result<EnsembleSpec, String>,
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub sigma: f64,
    pub event: Option<SweepEvent>,
}

fn resized(spec: &EnsembleSpec, n: usize) -> Result<EnsembleSpec> {
    if spec.n() == n {
        return Ok(spec.clone());
    }
    let mut v = spec.to_json();
    v["n"] = json!(n);
    EnsembleSpec::from_json(&v)
}

/// Cells in output order: ensemble, n, s, m, σ, then event.
pub fn build_cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    cfg.validate()?;
    let events: Vec<Option<SweepEvent>> = match cfg.kind {
        ExperimentKind::EstimateSweep => cfg.estimate.which.iter().copied().map(Some).collect(),
        _ => vec![None],
    };
    let mut cells = Vec::new();
    for spec in cfg.ensemble_specs()? {
        for &n in &cfg.grid.n {
            let ensemble = resized(&spec, n).map_err(|e| e.to_string());
            for &s in &cfg.grid.s {
                for &m in &cfg.grid.m {
                    for &sigma in &cfg.grid.sigma {
                        for &event in &events {
                            cells.push(Cell {
                                index: cells.len(),
                                family: spec.family().name().to_string(),
                                ensemble: ensemble.clone(),
                                n,
                                s,
                                m,
                                sigma,
                                event,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

impl Cell {
    fn spec(&self) -> Result<&EnsembleSpec> {
        self.ensemble.as_ref().map_err(|e| Error::InvalidConfig(e.clone()))
    }

    fn trial_rng(&self, seed: u64, trial: usize) -> Rng {
        stream(seed, &[self.index as u64, trial as u64])
    }
}

/// Named per-cell value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub cell: usize,
    pub ensemble: String,
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub sigma: f64,
    /// Program, event name or `golfing`.
    pub label: String,
    pub trials: usize,
    pub metrics: Vec<Metric>,
    pub error: Option<String>,
    pub wall_seconds: f64,
}

impl CellRecord {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

/// Least-squares fit of `log(median ‖x̂ − x‖₂²)` against `log m`.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeFit {
    pub ensemble: String,
    pub n: usize,
    pub s: usize,
    pub sigma: f64,
    pub program: Program,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub version: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config_hash: String,
    pub signal: String,
    pub success_threshold: f64,
    /// Metric columns, in CSV order.
    pub columns: Vec<String>,
    pub records: Vec<CellRecord>,
    pub fits: Vec<SlopeFit>,
    pub wall_seconds: f64,
}

impl ExperimentResult {
    /// True when no cell raised an error.
    pub fn completed(&self) -> bool {
        self.records.iter().all(|r| r.error.is_none())
    }
}

/// Dispatches on `cfg.kind`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    match cfg.kind {
        ExperimentKind::PhaseTransition => run_phase_transition(cfg),
        ExperimentKind::ErrorScaling => run_error_scaling(cfg),
        ExperimentKind::CertificateRate => run_certificate_rate(cfg),
        ExperimentKind::EstimateSweep => run_estimate_sweep(cfg),
        ExperimentKind::EnsembleCompare => run_ensemble_compare(cfg),
    }
}

/// [`run`] on a dedicated pool of `threads` workers.
pub fn run_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run(cfg))
}

fn expect_kind(cfg: &ExperimentConfig, kinds: &[ExperimentKind]) -> Result<()> {
    if kinds.contains(&cfg.kind) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("config kind {} does not match this runner", cfg.kind.name())))
    }
}

fn execute(
    cfg: &ExperimentConfig,
    columns: Vec<String>,
    label: impl Fn(&Cell) -> String + Sync,
    body: impl Fn(&Cell) -> Result<Vec<f64>> + Sync,
) -> Result<ExperimentResult> {
    let start = Instant::now();
    let cells = build_cells(cfg)?;
    let records = cells
        .par_iter()
        .map(|cell| {
            let t0 = Instant::now();
            let (values, error) = match body(cell) {
                Ok(v) => (v, None),
                Err(e) => (vec![f64::NAN; columns.len()], Some(e.to_string())),
            };
            debug_assert_eq!(values.len(), columns.len());
            CellRecord {
                cell: cell.index,
                ensemble: cell.family.clone(),
                n: cell.n,
                s: cell.s,
                m: cell.m,
                sigma: cell.sigma,
                label: label(cell),
                trials: cfg.trials,
                metrics: columns.iter().zip(values).map(|(c, v)| Metric { name: c.clone(), value: v }).collect(),
                error,
                wall_seconds: t0.elapsed().as_secs_f64(),
            }
        })
        .collect();
    Ok(ExperimentResult {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.kind,
        seed: cfg.seed,
        config_hash: cfg.hash()?,
        signal: cfg.signal.label(),
        success_threshold: SUCCESS_TOL,
        columns,
        records,
        fits: Vec::new(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs `f` for every trial of a cell in parallel, keeping trial order.
fn trials<T: Send>(cfg: &ExperimentConfig, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..cfg.trials).into_par_iter().map(f).collect()
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn normal(rng: &mut Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// Everything one recovery program produced on one trial.
#[derive(Debug, Clone, Serialize)]
pub struct ProgramOutcome {
    pub program: Program,
    pub l2_error: f64,
    pub l1_error: f64,
    pub relative_error: f64,
    pub converged: bool,
    pub polished: bool,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub success: bool,
    pub l2_bound: Option<f64>,
    pub l1_bound: Option<f64>,
    pub x_hat: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryTrial {
    pub cell: usize,
    pub trial: usize,
    pub x: Vec<f64>,
    pub sigma_m: f64,
    pub outcomes: Vec<ProgramOutcome>,
}

/// Plants `x`, draws `A` and the noise (in that order, all from the trial
/// stream), and solves every program in `programs` on the same `(A, y)`.
pub fn recovery_trial(cfg: &ExperimentConfig, cell: &Cell, trial: usize, programs: &[Program]) -> Result<RecoveryTrial> {
    let spec = cell.spec()?;
    let mut rng = cell.trial_rng(cfg.seed, trial);
    let x = cfg.signal.plant(cell.n, cell.s, &mut rng)?;
    let a = build_matrix(spec, cell.m, &mut rng)?;
    let sigma_m = cell.sigma / (cell.m as f64).sqrt();
    let clean = a.apply(&x)?;
    let entries = match clean.entries() {
        VectorEntries::Real(v) => VectorEntries::Real(v + DVector::from_fn(v.len(), |_, _| sigma_m * normal(&mut rng))),
        VectorEntries::Complex(v) => {
            // circular noise: E|z_k|² = 1
            let h = std::f64::consts::FRAC_1_SQRT_2 * sigma_m;
            VectorEntries::Complex(v + DVector::from_fn(v.len(), |_, _| C64::new(h * normal(&mut rng), h * normal(&mut rng))))
        }
    };
    let y = MeasurementVector::new(entries, sigma_m)?;
    let (a, y) = if a.field() == Field::Complex { realify(&a, &y)? } else { (a, y) };
    let problem = RecoveryProblem::new(a, y, cfg.lambda)?;
    let xn = x.l2_norm();
    let mut outcomes = Vec::with_capacity(programs.len());
    for &p in programs {
        let r = problem.solve(p, &cfg.solver)?;
        let e = r.error_vector(&x)?;
        let l2 = e.norm();
        let (l2_bound, l1_bound) = if p == Program::Bp {
            (None, None)
        } else {
            let inputs = ErrorBoundInputs::new(cell.s.max(1), cell.m, cell.n, cell.sigma, cfg.beta(), x.clone())?;
            (Some(l2_error_bound(&inputs, p)?), Some(l1_error_bound(&inputs, p)?))
        };
        outcomes.push(ProgramOutcome {
            program: p,
            l2_error: l2,
            l1_error: e.iter().map(|v| v.abs()).sum(),
            relative_error: if xn > 0.0 { l2 / xn } else { l2 },
            converged: r.converged,
            polished: r.polished,
            iterations: r.iterations,
            kkt_residual: r.kkt_residual,
            success: r.converged && l2 <= SUCCESS_TOL * xn,
            l2_bound,
            l1_bound,
            x_hat: r.x_hat.as_slice().to_vec(),
        });
    }
    Ok(RecoveryTrial { cell: cell.index, trial, x: x.as_slice().to_vec(), sigma_m, outcomes })
}

fn phase_columns() -> Vec<String> {
    ["success_rate", "successes", "nonconverged", "s_log_n"].map(String::from).to_vec()
}

fn phase_body(cfg: &ExperimentConfig, cell: &Cell) -> Result<Vec<f64>> {
    let runs = trials(cfg, |j| recovery_trial(cfg, cell, j, &[cfg.program]))?;
    let successes = runs.iter().filter(|r| r.outcomes[0].success).count();
    let nonconverged = runs.iter().filter(|r| !r.outcomes[0].converged).count();
    Ok(vec![
        successes as f64 / cfg.trials as f64,
        successes as f64,
        nonconverged as f64,
        cell.s as f64 * (cell.n as f64).ln(),
    ])
}

/// Noiseless exact-recovery frequency per cell; a non-converged solve counts
/// as a failure and is also tallied under `nonconverged`.
pub fn run_phase_transition(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(cfg, &[ExperimentKind::PhaseTransition])?;
    execute(cfg, phase_columns(), |_| cfg.program.to_string(), |cell| phase_body(cfg, cell))
}

/// The phase transition of every listed ensemble on the same grid.
pub fn run_ensemble_compare(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(cfg, &[ExperimentKind::EnsembleCompare])?;
    execute(cfg, phase_columns(), |_| cfg.program.to_string(), |cell| phase_body(cfg, cell))
}

fn scaling_programs(cfg: &ExperimentConfig) -> Vec<Program> {
    let mut ps = vec![cfg.program];
    for &p in &cfg.compare {
        if !ps.contains(&p) {
            ps.push(p);
        }
    }
    ps
}

/// Ratio of two ℓ₂ errors is within `factor` either way.
fn within_factor(a: f64, b: f64, factor: f64) -> bool {
    const FLOOR: f64 = 1e-12;
    let (a, b) = (a.max(FLOOR), b.max(FLOOR));
    a <= factor * b && b <= factor * a
}

/// Factor within which compared programs should track the primary one.
pub const AGREEMENT_FACTOR: f64 = 4.0;

/// Median errors next to the reference bounds, plus a `log m` slope fit per
/// `(ensemble, n, s, σ)` series.
pub fn run_error_scaling(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(cfg, &[ExperimentKind::ErrorScaling])?;
    let programs = scaling_programs(cfg);
    let mut columns = Vec::new();
    for (k, p) in programs.iter().enumerate() {
        let pre = if k == 0 { String::new() } else { format!("{p}_") };
        for c in ["median_l2_sq", "median_l1", "l2_bound_sq", "l1_bound", "nonconverged"] {
            columns.push(format!("{pre}{c}"));
        }
        if k > 0 {
            columns.push(format!("{pre}within_4x"));
        }
        columns.push(format!("{pre}fitted_slope"));
    }
    let mut result = execute(cfg, columns, |_| cfg.program.to_string(), |cell| {
        let runs = trials(cfg, |j| recovery_trial(cfg, cell, j, &programs))?;
        let mut out = Vec::new();
        for k in 0..programs.len() {
            let col = |f: &dyn Fn(&ProgramOutcome) -> f64| runs.iter().map(|r| f(&r.outcomes[k])).collect::<Vec<f64>>();
            out.push(median(&col(&|o| o.l2_error * o.l2_error)));
            out.push(median(&col(&|o| o.l1_error)));
            out.push(median(&col(&|o| o.l2_bound.unwrap_or(f64::NAN).powi(2))));
            out.push(median(&col(&|o| o.l1_bound.unwrap_or(f64::NAN))));
            out.push(runs.iter().filter(|r| !r.outcomes[k].converged).count() as f64);
            if k > 0 {
                let agree = runs
                    .iter()
                    .filter(|r| within_factor(r.outcomes[k].l2_error, r.outcomes[0].l2_error, AGREEMENT_FACTOR))
                    .count();
                out.push(agree as f64 / cfg.trials as f64);
            }
            out.push(f64::NAN);
        }
        Ok(out)
    })?;
    for (k, &p) in programs.iter().enumerate() {
        let pre = if k == 0 { String::new() } else { format!("{p}_") };
        let fits = fit_slopes(&result.records, &format!("{pre}median_l2_sq"), p);
        let slope_col = format!("{pre}fitted_slope");
        for rec in &mut result.records {
            if let Some(f) = fits.iter().find(|f| same_series(f, rec)) {
                if let Some(m) = rec.metrics.iter_mut().find(|m| m.name == slope_col) {
                    m.value = f.slope;
                }
            }
        }
        result.fits.extend(fits);
    }
    Ok(result)
}

fn same_series(f: &SlopeFit, r: &CellRecord) -> bool {
    f.ensemble == r.ensemble && f.n == r.n && f.s == r.s && f.sigma.to_bits() == r.sigma.to_bits()
}

/// Ordinary least squares `y = a + b·x`, returning `(b, a)`.
pub fn least_squares_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let k = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    Some((b, my - b * mx))
}

fn fit_slopes(records: &[CellRecord], column: &str, program: Program) -> Vec<SlopeFit> {
    let mut fits: Vec<SlopeFit> = Vec::new();
    for r in records {
        if fits.iter().any(|f| same_series(f, r)) {
            continue;
        }
        let points: Vec<(f64, f64)> = records
            .iter()
            .filter(|q| q.ensemble == r.ensemble && q.n == r.n && q.s == r.s && q.sigma.to_bits() == r.sigma.to_bits())
            .filter_map(|q| q.metric(column).filter(|v| v.is_finite() && *v > 0.0).map(|v| ((q.m as f64).ln(), v.ln())))
            .collect();
        if let Some((slope, intercept)) = least_squares_line(&points) {
            fits.push(SlopeFit {
                ensemble: r.ensemble.clone(),
                n: r.n,
                s: r.s,
                sigma: r.sigma,
                program,
                slope,
                intercept,
                points: points.len(),
            });
        }
    }
    fits
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateTrial {
    pub cell: usize,
    pub trial: usize,
    pub support: Vec<usize>,
    pub success: bool,
    pub q_norms: Vec<f64>,
    pub batches_used: usize,
    pub rows_used: usize,
    pub on_support_margin: Option<f64>,
    pub off_support_margin: Option<f64>,
    pub inexact_pass: Option<bool>,
    /// Basis pursuit on the certificate's own matrix recovered `x`.
    pub recovered: Option<bool>,
}

/// One golfing run with the row budget `m` split by [`GolfingConfig::with_total_rows`].
/// Successful certificates are checked against the inexact-duality conditions
/// and basis pursuit is run on the sampled matrix.
pub fn certificate_trial(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> Result<CertificateTrial> {
    let spec = cell.spec()?;
    let mut gcfg = GolfingConfig::with_total_rows(cell.n, cell.s, cell.m)?;
    if let Some(extra) = cfg.golfing.max_extra_batches {
        gcfg.max_extra_batches = extra;
    }
    let mut rng = cell.trial_rng(cfg.seed, trial);
    let x = cfg.signal.plant(cell.n, cell.s, &mut rng)?;
    let t = x.support();
    let (a, cert) = golfing_scheme(spec, &t, &x, &gcfg, &mut rng)?;
    let mut out = CertificateTrial {
        cell: cell.index,
        trial,
        support: t.indices().to_vec(),
        success: cert.success,
        q_norms: cert.q_norms.clone(),
        batches_used: cert.batches_used(),
        rows_used: cert.rows_used(),
        on_support_margin: None,
        off_support_margin: None,
        inexact_pass: None,
        recovered: None,
    };
    if cert.success {
        if let Ok(r) = verify_inexact_duality(&cert.v, &a, &t, &x) {
            out.on_support_margin = Some(r.on_support.margin);
            out.off_support_margin = Some(r.off_support.margin);
            out.inexact_pass = Some(r.pass);
        }
        out.recovered = Some(recovers(&a, &x, cfg)?);
    }
    Ok(out)
}

fn recovers(a: &MeasurementMatrix, x: &Signal, cfg: &ExperimentConfig) -> Result<bool> {
    let y = a.apply(x)?;
    let r = basis_pursuit(a, &y, &cfg.solver)?;
    Ok(r.converged && r.error_vector(x)?.norm() <= SUCCESS_TOL * x.l2_norm())
}

/// Golfing success frequency per cell with the `1 − e^{−β} − 1/n` reference.
/// `soundness_violations` counts certified instances where basis pursuit
/// still failed; it must be zero.
pub fn run_certificate_rate(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(cfg, &[ExperimentKind::CertificateRate])?;
    if matches!(cfg.signal, super::SignalModel::Compressible { .. }) {
        return Err(Error::InvalidConfig("certificate_rate needs an exactly sparse signal model".into()));
    }
    let columns = [
        "success_rate",
        "successes",
        "ref_probability",
        "planned_rows",
        "mean_rows_used",
        "mean_batches_used",
        "median_final_q",
        "inexact_pass_rate",
        "median_on_support_margin",
        "median_off_support_margin",
        "unrecovered_successes",
        "soundness_violations",
    ]
    .map(String::from)
    .to_vec();
    execute(cfg, columns, |_| "golfing".into(), |cell| {
        let planned = GolfingConfig::with_total_rows(cell.n, cell.s, cell.m)?.planned_rows();
        let runs = trials(cfg, |j| certificate_trial(cfg, cell, j))?;
        let ok: Vec<&CertificateTrial> = runs.iter().filter(|r| r.success).collect();
        let n = cell.n as f64;
        let finals: Vec<f64> = runs.iter().map(|r| *r.q_norms.last().unwrap_or(&f64::NAN)).collect();
        let on: Vec<f64> = ok.iter().filter_map(|r| r.on_support_margin).collect();
        let off: Vec<f64> = ok.iter().filter_map(|r| r.off_support_margin).collect();
        let inexact = ok.iter().filter(|r| r.inexact_pass == Some(true)).count();
        Ok(vec![
            ok.len() as f64 / cfg.trials as f64,
            ok.len() as f64,
            (1.0 - (-cfg.beta()).exp() - 1.0 / n).max(0.0),
            planned as f64,
            mean(runs.iter().map(|r| r.rows_used as f64)),
            mean(runs.iter().map(|r| r.batches_used as f64)),
            median(&finals),
            if ok.is_empty() { f64::NAN } else { inexact as f64 / ok.len() as f64 },
            median(&on),
            median(&off),
            ok.iter().filter(|r| r.recovered == Some(false)).count() as f64,
            ok.iter().filter(|r| r.inexact_pass == Some(true) && r.recovered == Some(false)).count() as f64,
        ])
    })
}

/// Per-cell fixed inputs of an estimate sweep.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub support: SupportSet,
    /// `±1` on the support.
    pub v: DVector<f64>,
    pub mu: f64,
    /// Root seed of the cell's trial streams.
    pub seed: u64,
}

/// Seed of cell `index`'s trial streams: trial `k` runs on `stream(cell_seed, [k])`.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    derive_key(seed, &[index as u64])
}

fn coherence_for(spec: &EnsembleSpec, m: usize) -> Result<f64> {
    match spec.family() {
        Family::Gaussian => Ok(stochastic_coherence(spec, m, &TailModel::gaussian(spec.n()))?.mu),
        _ => Ok(deterministic_coherence(spec)?.mu),
    }
}

pub fn sweep_setup(cfg: &ExperimentConfig, cell: &Cell) -> Result<SweepSetup> {
    let spec = cell.spec()?;
    let mut rng = stream(cfg.seed, &[cell.index as u64, SETUP_STREAM]);
    let support = SupportSet::new(index::sample(&mut rng, cell.n, cell.s).into_vec(), cell.n)?;
    let mut v = DVector::zeros(cell.n);
    for &i in support.indices() {
        v[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    let mu = match cfg.estimate.mu {
        Some(mu) => mu,
        None => coherence_for(spec, cell.m)?,
    };
    Ok(SweepSetup { support, v, mu, seed: cell_seed(cfg.seed, cell.index) })
}

/// The fixed matrix of a noise cell, realified when complex.
fn noise_matrix(cfg: &ExperimentConfig, cell: &Cell) -> Result<MeasurementMatrix> {
    let mut rng = stream(cfg.seed, &[cell.index as u64, SETUP_STREAM, 1]);
    let a = build_matrix(cell.spec()?, cell.m, &mut rng)?;
    if a.field() == Field::Complex {
        let zeros = MeasurementVector::new(VectorEntries::Complex(DVector::zeros(cell.m)), 0.0)?;
        Ok(realify(&a, &zeros)?.0)
    } else {
        Ok(a)
    }
}

fn noise_sigma(cell: &Cell) -> f64 {
    if cell.sigma > 0.0 {
        cell.sigma
    } else {
        1.0
    }
}

fn rip_mode(cfg: &ExperimentConfig, seed: u64, k: usize) -> RipMode {
    RipMode::Sampled { budget: cfg.estimate.rip_budget, seed: derive_key(seed, &[k as u64, 1]) }
}

fn sweep_report(cfg: &ExperimentConfig, cell: &Cell, setup: &SweepSetup) -> Result<(EmpiricalReport, bool)> {
    let event = cell.event.expect("sweep cells carry an event");
    let spec = cell.spec()?;
    let level = cfg.estimate.level;
    match event.estimate() {
        Some(which) => {
            let q = EventQuery {
                which,
                ensemble: spec,
                m: cell.m,
                support: &setup.support,
                v: Some(&setup.v),
                level,
                mu: setup.mu,
            };
            let report = empirical_estimate(&q, cfg.trials, setup.seed)?;
            let flag = tail_bound(&TailBoundQuery::new(which, cell.m, cell.s, cell.n, setup.mu, level)?)?.out_of_range;
            Ok((report, flag))
        }
        None if event == SweepEvent::Noise => {
            let a = noise_matrix(cfg, cell)?;
            let t = cfg.estimate.with_projection.then_some(&setup.support);
            let r = noise_exceedance(&a, noise_sigma(cell), cfg.estimate.with_projection, t, cfg.trials, setup.seed)?;
            Ok((r, false))
        }
        None => {
            let hits = trials(cfg, |k| {
                let a = build_matrix(spec, cell.m, &mut stream(setup.seed, &[k as u64]))?;
                let a = realified(a)?;
                let r = weak_rip_empirical(&a, &setup.support, cfg.estimate.rip_r, cfg.estimate.rip_delta, rip_mode(cfg, setup.seed, k))?;
                Ok(!r.holds)
            })?;
            // no closed-form probability accompanies the weak-RIP event
            Ok((EmpiricalReport::from_counts(hits.iter().filter(|&&h| h).count(), cfg.trials, f64::NAN), false))
        }
    }
}

fn realified(a: MeasurementMatrix) -> Result<MeasurementMatrix> {
    if a.field() == Field::Complex {
        let zeros = MeasurementVector::new(VectorEntries::Complex(DVector::zeros(a.nrows())), 0.0)?;
        Ok(realify(&a, &zeros)?.0)
    } else {
        Ok(a)
    }
}

/// Event frequencies next to their closed-form bounds, one cell per
/// `(ensemble, n, s, m, σ, event)`.
pub fn run_estimate_sweep(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(cfg, &[ExperimentKind::EstimateSweep])?;
    let columns = ["failures", "empirical_rate", "bound", "ci_lower", "ci_upper", "pass", "mu", "level", "out_of_range"]
        .map(String::from)
        .to_vec();
    execute(
        cfg,
        columns,
        |cell| cell.event.map(|e| e.name().to_string()).unwrap_or_default(),
        |cell| {
            let setup = sweep_setup(cfg, cell)?;
            let (r, flag) = sweep_report(cfg, cell, &setup)?;
            let pass = if r.theoretical_bound.is_nan() { f64::NAN } else { r.pass as u8 as f64 };
            Ok(vec![
                r.failures as f64,
                r.empirical_rate,
                r.theoretical_bound,
                r.ci_lower,
                r.ci_upper,
                pass,
                setup.mu,
                cfg.estimate.level,
                flag as u8 as f64,
            ])
        },
    )
}

/// Re-executes trial `trial` of cell `cell` and returns its full record.
pub fn replay_trial(cfg: &ExperimentConfig, cell: usize, trial: usize) -> Result<Value> {
    let cells = build_cells(cfg)?;
    let c = cells
        .get(cell)
        .ok_or_else(|| Error::InvalidArgument(format!("cell {cell} out of range (0..{})", cells.len())))?;
    if trial >= cfg.trials {
        return Err(Error::InvalidArgument(format!("trial {trial} out of range (0..{})", cfg.trials)));
    }
    let detail = match cfg.kind {
        ExperimentKind::PhaseTransition | ExperimentKind::EnsembleCompare => {
            serde_json::to_value(recovery_trial(cfg, c, trial, &[cfg.program])?)?
        }
        ExperimentKind::ErrorScaling => serde_json::to_value(recovery_trial(cfg, c, trial, &scaling_programs(cfg))?)?,
        ExperimentKind::CertificateRate => serde_json::to_value(certificate_trial(cfg, c, trial)?)?,
        ExperimentKind::EstimateSweep => replay_event(cfg, c, trial)?,
    };
    Ok(json!({
        "kind": cfg.kind,
        "cell": cell,
        "trial": trial,
        "ensemble": c.family,
        "n": c.n,
        "s": c.s,
        "m": c.m,
        "sigma": c.sigma,
        "detail": detail,
    }))
}

fn replay_event(cfg: &ExperimentConfig, cell: &Cell, trial: usize) -> Result<Value> {
    let setup = sweep_setup(cfg, cell)?;
    let spec = cell.spec()?;
    let event = cell.event.expect("sweep cells carry an event");
    let k = trial as u64;
    let base = json!({"event": event, "support": setup.support.indices(), "mu": setup.mu});
    let extra = match event.estimate() {
        Some(which) => {
            let q = EventQuery {
                which,
                ensemble: spec,
                m: cell.m,
                support: &setup.support,
                v: Some(&setup.v),
                level: cfg.estimate.level,
                mu: setup.mu,
            };
            let a = build_matrix(spec, cell.m, &mut stream(setup.seed, &[k]))?;
            json!({"occurred": q.occurs(&a.to_complex())})
        }
        None if event == SweepEvent::Noise => {
            let a = noise_matrix(cfg, cell)?;
            let wp = cfg.estimate.with_projection;
            let t = wp.then_some(&setup.support);
            let sigma = noise_sigma(cell);
            let threshold = noise_correlation_bound(&a, sigma, wp, t)?;
            let r = residual_matrix(a.as_real()?, wp, t)?;
            let stat = noise_statistic(&r, sigma, setup.seed, k);
            json!({"statistic": stat, "threshold": threshold, "occurred": stat > threshold})
        }
        None => {
            let a = realified(build_matrix(spec, cell.m, &mut stream(setup.seed, &[k]))?)?;
            let r = weak_rip_empirical(&a, &setup.support, cfg.estimate.rip_r, cfg.estimate.rip_delta, rip_mode(cfg, setup.seed, trial))?;
            json!({"occurred": !r.holds, "weak_rip": r})
        }
    };
    let mut out = base;
    if let (Value::Object(o), Value::Object(e)) = (&mut out, extra) {
        o.extend(e);
    }
    Ok(out)
}
