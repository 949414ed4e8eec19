//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines are always shown.
//! Criteria listed in `KNOWN_UNATTAINABLE` are still run and reported; only
//! their soundness side conditions are enforced.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use ripless::certificates::{least_squares_certificate, verify_inexact_duality};
use ripless::ensembles::{build_matrix, EnsembleSpec};
use ripless::estimates::{empirical_estimate, noise_exceedance, rip_constant_exact, EmpiricalReport, Estimate, EventQuery};
use ripless::harness::{csv_string, run_with_threads, ExperimentConfig, ExperimentResult, SignalModel};
use ripless::linalg::lstsq;
use ripless::model::{MeasurementMatrix, MeasurementVector, SupportSet};
use ripless::rng::stream;
use ripless::solvers::{basis_pursuit, SolverOptions};

const SEED: u64 = 20_240_601;

const C1_MIN_RATE: f64 = 0.9;
const C2_MIN_RATE: f64 = 0.8;
const C1_C2_BUDGET: Duration = Duration::from_secs(5 * 60);
const C3_SLOPE_RANGE: (f64, f64) = (-1.4, -0.6);
const C3_BUDGET: Duration = Duration::from_secs(15 * 60);
const C4_MIN_AGREEMENT: f64 = 0.9;
const C5_TRIALS: usize = 500;
const C5_BUDGET: Duration = Duration::from_secs(20 * 60);
const C6_TRIALS: usize = 1000;
const C7_MIN_RATE: f64 = 0.9;
const C7_TRIALS: usize = 200;
const C8_INSTANCES: u64 = 50;
const C8_MATCH_TOL: f64 = 1e-6;
const C8_RESIDUAL_TOL: f64 = 1e-9;
const C9_DUPLICATE_TOL: f64 = 1e-9;
const C10_DRAWS: usize = 10_000;

/// Criteria that cannot be met as stated; see the project notes.
const KNOWN_UNATTAINABLE: &[u32] = &[7];

struct Outcome {
    id: u32,
    pass: bool,
    /// Side conditions that must hold even when `pass` is false.
    sound: bool,
    detail: String,
}

fn outcome(id: u32, pass: bool, detail: String) -> Outcome {
    Outcome { id, pass, sound: true, detail }
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json_str(text).expect("acceptance config is valid")
}

fn timed(cfg: &ExperimentConfig, threads: usize) -> (ExperimentResult, Duration) {
    let t0 = Instant::now();
    let r = run_with_threads(cfg, threads).expect("experiment runs");
    (r, t0.elapsed())
}

fn phase_config(family: &str) -> ExperimentConfig {
    config(&format!(
        r#"{{"kind": "phase_transition", "ensemble": {{"family": "{family}", "n": 256}},
            "grid": {{"n": [256], "s": [5], "m": [200]}}, "trials": 100, "seed": {SEED}, "program": "bp"}}"#
    ))
}

fn recovery(id: u32, family: &str, min_rate: f64) -> (Outcome, ExperimentConfig, String) {
    let cfg = phase_config(family);
    let (r, took) = timed(&cfg, 1);
    let rec = &r.records[0];
    let rate = rec.metric("success_rate").unwrap_or(f64::NAN);
    let nonconv = rec.metric("nonconverged").unwrap_or(f64::NAN);
    let pass = rec.error.is_none() && rate >= min_rate && took <= C1_C2_BUDGET;
    let detail = format!(
        "{family} n=256 s=5 m=200: rate {rate:.2} (need >= {min_rate}), {nonconv} non-converged, {:.1}s single-threaded",
        took.as_secs_f64()
    );
    (outcome(id, pass, detail), cfg, csv_string(&r).unwrap())
}

fn scaling_config() -> ExperimentConfig {
    let base = (4.0 * 256f64.ln()).ceil() as usize;
    let ms: Vec<usize> = [4, 8, 16, 32].iter().map(|k| k * base).collect();
    config(&format!(
        r#"{{"kind": "error_scaling", "ensemble": {{"family": "gaussian", "n": 256}},
            "grid": {{"n": [256], "s": [4], "m": {ms:?}, "sigma": [0.5]}}, "trials": 50, "seed": {SEED},
            "program": "lasso", "compare": ["dantzig"]}}"#
    ))
}

fn error_scaling() -> (Outcome, Outcome, ExperimentConfig, String) {
    let cfg = scaling_config();
    let t0 = Instant::now();
    let r = run_with_threads(&cfg, rayon::current_num_threads()).expect("experiment runs");
    let took = t0.elapsed();
    let ok = r.completed();
    let slope = r.fits.iter().find(|f| f.program == cfg.program).map_or(f64::NAN, |f| f.slope);
    let medians: Vec<String> =
        r.records.iter().map(|c| format!("{}:{:.3}", c.m, c.metric("median_l2_sq").unwrap_or(f64::NAN))).collect();
    let c3 = outcome(
        3,
        ok && slope >= C3_SLOPE_RANGE.0 && slope <= C3_SLOPE_RANGE.1 && took <= C3_BUDGET,
        format!(
            "LASSO slope of log median |x^-x|^2 vs log m = {slope:.3} (need in [{}, {}]); medians {}; {:.1}s",
            C3_SLOPE_RANGE.0,
            C3_SLOPE_RANGE.1,
            medians.join(" "),
            took.as_secs_f64()
        ),
    );
    let fractions: Vec<f64> = r.records.iter().map(|c| c.metric("dantzig_within_4x").unwrap_or(f64::NAN)).collect();
    // every cell has the same number of trials, so the mean of the cell
    // fractions is the fraction over all trials
    let overall = fractions.iter().sum::<f64>() / fractions.len() as f64;
    let c4 = outcome(
        4,
        ok && overall >= C4_MIN_AGREEMENT,
        format!("Dantzig l2 error within 4x of LASSO in {:.1}% of {} trials (need >= 90%)", 100.0 * overall, 50 * fractions.len()),
    );
    (c3, c4, cfg, csv_string(&r).unwrap())
}

fn estimate_sweep() -> Outcome {
    let t0 = Instant::now();
    let sizes = [(32usize, 2usize, 256usize), (64, 3, 512), (128, 4, 1024)];
    let (mut cells, mut informative, mut violations, mut errors) = (0, 0, Vec::new(), 0);
    for (n, s, m) in sizes {
        let cfg = config(&format!(
            r#"{{"kind": "estimate_sweep",
                "ensembles": [{{"family": "binary", "n": {n}}}, {{"family": "subsampled_dft", "n": {n}}},
                              {{"family": "gaussian", "n": {n}}}],
                "grid": {{"n": [{n}], "s": [{s}], "m": [{m}]}}, "trials": {C5_TRIALS}, "seed": {SEED},
                "estimate": {{"which": ["e1", "e2", "e3", "e4"], "level": 0.5}}}}"#
        ));
        let r = run_with_threads(&cfg, rayon::current_num_threads()).expect("sweep runs");
        for c in &r.records {
            cells += 1;
            if c.error.is_some() {
                errors += 1;
                continue;
            }
            let bound = c.metric("bound").unwrap();
            if bound < 1.0 {
                informative += 1;
                if c.metric("pass") != Some(1.0) {
                    violations.push(format!("{} {} n={n}", c.ensemble, c.label));
                }
            }
        }
    }
    let took = t0.elapsed();
    outcome(
        5,
        errors == 0 && violations.is_empty() && informative > 0 && took <= C5_BUDGET,
        format!(
            "{cells} cells, {informative} with bound < 1, {} outside bound + CP slack {:?}, {errors} errors, {:.1}s",
            violations.len(),
            violations,
            took.as_secs_f64()
        ),
    )
}

fn e1_threshold() -> Outcome {
    let (n, s) = (64usize, 3usize);
    let ln = (n as f64).ln();
    let support = SupportSet::new(vec![5, 22, 47], n).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for (spec, mu) in [(EnsembleSpec::gaussian(n, 0).unwrap(), 6.0 * ln), (EnsembleSpec::subsampled_dft(n, 0).unwrap(), 1.0)] {
        let m = ((56.0 / 3.0) * mu * s as f64 * ln).ceil() as usize;
        let q = EventQuery { which: Estimate::E1, ensemble: &spec, m, support: &support, v: None, level: 0.5, mu };
        let r = empirical_estimate(&q, C6_TRIALS, SEED).expect("estimate runs");
        let vs = EmpiricalReport::from_counts(r.failures, r.trials, 2.0 / n as f64);
        pass &= vs.pass;
        parts.push(format!("{} m={m}: {}/{} (CI [{:.4}, {:.4}] vs 2/n = {:.4})", spec.family().name(), vs.failures, vs.trials, vs.ci_lower, vs.ci_upper, 2.0 / n as f64));
    }
    outcome(6, pass, parts.join("; "))
}

fn golfing() -> Outcome {
    let (n, s) = (256usize, 4usize);
    let m = (40.0 * s as f64 * (n as f64).ln()).floor() as usize;
    let cfg = config(&format!(
        r#"{{"kind": "certificate_rate", "ensemble": {{"family": "gaussian", "n": {n}}},
            "grid": {{"n": [{n}], "s": [{s}], "m": [{m}]}}, "trials": {C7_TRIALS}, "seed": {SEED}}}"#
    ));
    let r = run_with_threads(&cfg, rayon::current_num_threads()).expect("experiment runs");
    let c = &r.records[0];
    let rate = c.metric("success_rate").unwrap_or(f64::NAN);
    let unrecovered = c.metric("unrecovered_successes").unwrap_or(f64::NAN);
    let violations = c.metric("soundness_violations").unwrap_or(f64::NAN);
    let sound = c.error.is_none() && unrecovered == 0.0 && violations == 0.0;
    Outcome {
        id: 7,
        pass: sound && rate >= C7_MIN_RATE,
        sound,
        detail: format!(
            "gaussian n={n} s={s} m={m}: success {rate:.3} (need >= {C7_MIN_RATE}), median final |q| {:.3}, \
             {unrecovered} successes not recovered by basis pursuit",
            c.metric("median_final_q").unwrap_or(f64::NAN)
        ),
    }
}

/// Sparsest `z` with `Az = y`, and whether it is the only one of its size.
fn l0_search(a: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, bool) {
    let n = a.ncols();
    for k in 0..=a.nrows().min(n) {
        let hits: Vec<DVector<f64>> = (0..n)
            .combinations(k)
            .filter_map(|cols| {
                let sub = a.select_columns(&cols);
                let z = lstsq(&sub, y);
                ((&sub * &z - y).norm() <= C8_RESIDUAL_TOL * (1.0 + y.norm())).then(|| {
                    let mut full = DVector::zeros(n);
                    for (j, &c) in cols.iter().enumerate() {
                        full[c] = z[j];
                    }
                    full
                })
            })
            .collect();
        if let Some(first) = hits.first() {
            return (first.clone(), hits.len() == 1);
        }
    }
    unreachable!("a full-rank square subsystem always fits")
}

fn oracle_equivalence() -> Outcome {
    let (n, s, m) = (8usize, 2usize, 6usize);
    let spec = EnsembleSpec::gaussian(n, 0).unwrap();
    let (mut unique, mut certified, mut violations, mut agree) = (0, 0, 0, 0);
    for k in 0..C8_INSTANCES {
        let mut rng = stream(SEED, &[8, k]);
        let x = SignalModel::Sign.plant(n, s, &mut rng).unwrap();
        let a = build_matrix(&spec, m, &mut rng).unwrap();
        let am = a.as_real().unwrap();
        let y = am * x.as_vector();
        let (z, is_unique) = l0_search(am, &y);
        if !is_unique {
            continue;
        }
        unique += 1;
        let bp = basis_pursuit(&a, &MeasurementVector::real(y, 0.0).unwrap(), &SolverOptions::default()).unwrap();
        let matches = (bp.x_hat.as_vector() - z).norm() <= C8_MATCH_TOL;
        agree += usize::from(matches);
        let t = x.support();
        let v = least_squares_certificate(&a, &t, &x).unwrap();
        if verify_inexact_duality(&v, &a, &t, &x).unwrap().pass {
            certified += 1;
            violations += usize::from(!matches);
        }
    }
    outcome(
        8,
        violations == 0,
        format!(
            "{C8_INSTANCES} instances n={n} s={s} m={m}: {unique} unique l0 minimizers, {certified} of them certified \
             (zero means the check is vacuous), {violations} violations; basis pursuit equals the l0 minimizer in \
             {agree}/{unique} unique cases"
        ),
    )
}

fn rip_sanity() -> Outcome {
    let id = MeasurementMatrix::from_real(DMatrix::identity(8, 8)).unwrap();
    let h = MeasurementMatrix::from_real(DMatrix::from_row_slice(
        4,
        4,
        &[0.5, 0.5, 0.5, 0.5, 0.5, -0.5, 0.5, -0.5, 0.5, 0.5, -0.5, -0.5, 0.5, -0.5, -0.5, 0.5],
    ))
    .unwrap();
    let d_id = rip_constant_exact(&id, 3).unwrap();
    let d_h = rip_constant_exact(&h, 2).unwrap();
    let mut rng = stream(SEED, &[9]);
    let g = build_matrix(&EnsembleSpec::gaussian(6, 0).unwrap(), 10, &mut rng).unwrap();
    let mut dup = g.as_real().unwrap().clone();
    let c0 = dup.column(0).normalize();
    dup.set_column(0, &c0);
    dup.set_column(3, &c0);
    let d_dup = rip_constant_exact(&MeasurementMatrix::from_real(dup).unwrap(), 2).unwrap();
    outcome(
        9,
        d_id == 0.0 && d_h == 0.0 && d_dup >= 1.0 - C9_DUPLICATE_TOL,
        format!("identity delta_3 = {d_id:e}, Hadamard delta_2 = {d_h:e}, duplicated column delta_2 = {d_dup:.12}"),
    )
}

fn noise_correlation() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [16usize, 64] {
        let a = MeasurementMatrix::from_real(DMatrix::identity(n, n)).unwrap();
        let r = noise_exceedance(&a, 1.0, false, None, C10_DRAWS, SEED + n as u64).unwrap();
        pass &= r.pass;
        parts.push(format!("n={n}: {}/{} (CI lower {:.5} vs 1/(2n) = {:.5})", r.failures, r.trials, r.ci_lower, r.theoretical_bound));
    }
    outcome(10, pass, parts.join("; "))
}

fn determinism(runs: &[(ExperimentConfig, String)]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (cfg, reference) in runs {
        for threads in [2usize, 5] {
            let again = csv_string(&run_with_threads(cfg, threads).unwrap()).unwrap();
            let same = &again == reference;
            pass &= same;
            parts.push(format!("{} with {threads} threads: {}", cfg.kind.name(), if same { "identical" } else { "DIFFERENT" }));
        }
    }
    outcome(11, pass, parts.join("; "))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut outcomes = Vec::new();
    let mut report = |o: Outcome| {
        println!("criterion {:>2}: {} - {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        outcomes.push(o);
    };
    let (c1, cfg1, csv1) = recovery(1, "gaussian", C1_MIN_RATE);
    report(c1);
    let (c2, _, _) = recovery(2, "subsampled_dft", C2_MIN_RATE);
    report(c2);
    let (c3, c4, cfg3, csv3) = error_scaling();
    report(c3);
    report(c4);
    report(estimate_sweep());
    report(e1_threshold());
    report(golfing());
    report(oracle_equivalence());
    report(rip_sanity());
    report(noise_correlation());
    report(determinism(&[(cfg1, csv1), (cfg3, csv3)]));

    let unexpected: Vec<u32> =
        outcomes.iter().filter(|o| !o.sound || (!o.pass && !KNOWN_UNATTAINABLE.contains(&o.id))).map(|o| o.id).collect();
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!(
        "acceptance: {passed}/{} criteria pass ({:.0}s); known unattainable: {KNOWN_UNATTAINABLE:?}",
        outcomes.len(),
        started.elapsed().as_secs_f64()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        ExitCode::FAILURE
    }
}
