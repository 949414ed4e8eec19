use nalgebra::{DMatrix, DVector};

use super::*;
use crate::ensembles::EnsembleSpec;
use crate::model::{MeasurementMatrix, Provenance, Signal, SupportSet, Entries};
use crate::rng::stream;

fn signs(n: usize, support: &[usize]) -> Signal {
    let mut v = vec![0.0; n];
    for (k, &i) in support.iter().enumerate() {
        v[i] = if k % 2 == 0 { 1.0 } else { -1.0 };
    }
    Signal::from_slice(&v).unwrap()
}

#[test]
fn ell_schedule() {
    assert_eq!(GolfingConfig::default_ell(16), 4);
    assert_eq!(GolfingConfig::default_ell(1), 2);
    assert_eq!(GolfingConfig::default_ell(4), 3);
    assert_eq!(GolfingConfig::default_ell(5), 4);
    assert_eq!(GolfingConfig::default_extra_batches(256), 3 * 6 + 1);
}

#[test]
fn targets_follow_schedule() {
    let (c, t) = GolfingConfig::targets(256, 16);
    let ln = 256f64.ln();
    assert_eq!(c.len(), 4);
    assert!((c[0] - 1.0 / (2.0 * ln.sqrt())).abs() < 1e-15 && c[1] == c[0] && c[2] == 0.5);
    assert!((t[0] - 1.0 / 32.0).abs() < 1e-15 && (t[3] - ln / 32.0).abs() < 1e-15);
}

#[test]
fn total_rows_split_sums_to_m() {
    let cfg = GolfingConfig::with_total_rows(256, 4, 887).unwrap();
    assert_eq!(cfg.planned_rows(), 887);
    assert!(cfg.batch_sizes[0] >= cfg.batch_sizes[2]);
    assert!(GolfingConfig::with_total_rows(256, 4, 2).is_err());
}

#[test]
fn s1_two_batches_reach_quarter() {
    let n = 64;
    let spec = EnsembleSpec::gaussian(n, 0).unwrap();
    let t = SupportSet::new(vec![5], n).unwrap();
    let x = signs(n, &[5]);
    let cfg = GolfingConfig::with_prefactor(n, 1, 1.0, 40.0).unwrap();
    let mut hits = 0;
    for seed in 0..20 {
        let (a, cert) = golfing_scheme(&spec, &t, &x, &cfg, &mut stream(seed, &[])).unwrap();
        assert!(cert.reconstruction_residual(&a).unwrap() <= 1e-10);
        if cert.q_norms.len() == 3 {
            let bound = 1.0 / (4.0 * (n as f64).ln());
            assert!(cert.final_q_norm() <= bound + 1e-15);
            assert!(cert.final_q_norm() <= 0.25);
            hits += 1;
        }
    }
    assert!(hits > 0);
}

#[test]
fn accepted_batches_contract() {
    let n = 32;
    let spec = EnsembleSpec::binary(n, 0).unwrap();
    let sup = vec![1, 9, 20];
    let t = SupportSet::new(sup.clone(), n).unwrap();
    let x = signs(n, &sup);
    let cfg = GolfingConfig::new(n, 3, 1.0).unwrap();
    for seed in 0..10 {
        let (a, cert) = golfing_scheme(&spec, &t, &x, &cfg, &mut stream(seed, &[1])).unwrap();
        assert!(cert.reconstruction_residual(&a).unwrap() <= 1e-10);
        assert_eq!(a.nrows(), cert.rows_used());
        let mut k = 0;
        for rec in &cert.batch_log {
            if rec.accepted {
                assert!(cert.q_norms[k + 1] <= cfg.c[rec.stage] * cert.q_norms[k] * (1.0 + 1e-12));
                k += 1;
            }
        }
        assert_eq!(k + 1, cert.q_norms.len());
        if cert.success {
            assert!(cert.final_q_norm() <= 0.25);
        }
    }
}

#[test]
fn complex_ensemble_gives_realified_matrix() {
    let n = 16;
    let spec = EnsembleSpec::subsampled_dft(n, 0).unwrap();
    let t = SupportSet::new(vec![2, 7], n).unwrap();
    let x = signs(n, &[2, 7]);
    let cfg = GolfingConfig::new(n, 2, 1.0).unwrap();
    let (a, cert) = golfing_scheme(&spec, &t, &x, &cfg, &mut stream(3, &[])).unwrap();
    let sampled: usize = cert.batch_log.iter().map(|b| b.rows).sum();
    assert_eq!(a.nrows(), 2 * sampled);
    assert!(cert.reconstruction_residual(&a).unwrap() <= 1e-10);
}

#[test]
fn budget_exhaustion_is_data() {
    let n = 64;
    let spec = EnsembleSpec::gaussian(n, 0).unwrap();
    let t = SupportSet::new(vec![0, 1, 2, 3], n).unwrap();
    let x = signs(n, &[0, 1, 2, 3]);
    let mut cfg = GolfingConfig::with_total_rows(n, 4, 12).unwrap();
    cfg.max_extra_batches = 2;
    let (a, cert) = golfing_scheme(&spec, &t, &x, &cfg, &mut stream(0, &[])).unwrap();
    assert!(!cert.success);
    assert!(cert.batches_used() <= cfg.ell + cfg.max_extra_batches + 1);
    assert!(cert.reconstruction_residual(&a).unwrap() <= 1e-10);
}

#[test]
fn partitioned_matrix_matches_weights() {
    let n = 8;
    let mut rng = stream(4, &[]);
    let spec = EnsembleSpec::gaussian(n, 0).unwrap();
    let raw = crate::ensembles::sample_raw_rows(&spec, 300, &mut rng).map(|c| c.re / 300f64.sqrt());
    let a = MeasurementMatrix::new(
        Entries::Real(raw),
        1.0 / 300f64.sqrt(),
        Some(Provenance { ensemble: "gaussian".into(), seed: 0, batches: vec![(0, 100), (100, 200), (200, 300)] }),
    )
    .unwrap();
    let t = SupportSet::new(vec![3], n).unwrap();
    let x = signs(n, &[3]);
    let mut cfg = GolfingConfig::new(n, 1, 1.0).unwrap();
    cfg.c = vec![1.0; cfg.ell];
    cfg.t = vec![1.0; cfg.ell];
    let cert = golfing_on_matrix(&a, &t, &x, &cfg).unwrap();
    assert!(cert.reconstruction_residual(&a).unwrap() <= 1e-10);
    assert_eq!(cert.w.len(), 300);
    assert!(cert.w.rows(200, 100).iter().all(|&v| v == 0.0));
    let plain = MeasurementMatrix::from_real(DMatrix::identity(n, n)).unwrap();
    assert!(golfing_on_matrix(&plain, &t, &x, &cfg).is_err());
}

#[test]
fn exact_duality_trivial_full_support() {
    let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.5, 3.0, -1.0, 0.0, 1.0, 4.0]);
    let a = MeasurementMatrix::from_real(m).unwrap();
    let x = Signal::from_slice(&[1.0, -2.0, 0.5]).unwrap();
    let v = DVector::from_vec(vec![1.0, -1.0, 1.0]);
    let r = verify_exact_duality(&v, &a, &SupportSet::full(3), &x).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn exact_duality_off_support_margin() {
    let a = MeasurementMatrix::from_real(DMatrix::identity(3, 3)).unwrap();
    let x = Signal::from_slice(&[1.0, 0.0, 0.0]).unwrap();
    let v = DVector::from_vec(vec![1.0, 1.5, 0.0]);
    let r = verify_exact_duality(&v, &a, &SupportSet::new(vec![0], 3).unwrap(), &x).unwrap();
    assert!(!r.pass);
    assert!((r.off_support.margin + 0.5).abs() < 1e-15);
}

#[test]
fn exact_duality_rank_deficient() {
    let a = MeasurementMatrix::from_real(DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0])).unwrap();
    let x = Signal::from_slice(&[1.0, 1.0, 0.0]).unwrap();
    let t = SupportSet::new(vec![0, 1], 3).unwrap();
    let v = DVector::from_vec(vec![1.0, 1.0, 0.0]);
    assert!(matches!(verify_exact_duality(&v, &a, &t, &x), Err(crate::Error::Precondition(_))));
}

#[test]
fn inexact_duality_orthonormal() {
    let a = MeasurementMatrix::from_real(DMatrix::identity(4, 4)).unwrap();
    let x = Signal::from_slice(&[0.0, 2.0, 0.0, -1.0]).unwrap();
    let t = SupportSet::new(vec![1, 3], 4).unwrap();
    let v = DVector::from_vec(vec![0.0, 1.0, 0.0, -1.0]);
    let r = verify_inexact_duality(&v, &a, &t, &x).unwrap();
    assert!(r.pass);
    assert_eq!(r.on_support.margin, 0.25);
    assert_eq!(r.off_support.margin, 0.25);
    assert_eq!(r.gram_inverse.value, 1.0);
    assert_eq!(r.off_support_columns.value, 0.0);
    let bad = DVector::from_vec(vec![0.0, 1.3, 0.0, -1.0]);
    let r = verify_inexact_duality(&bad, &a, &t, &x).unwrap();
    assert!(!r.on_support.pass && r.off_support.pass);
}

#[test]
fn tightened_certificate_is_exact() {
    let n = 48;
    let spec = EnsembleSpec::gaussian(n, 0).unwrap();
    let sup = vec![4, 30];
    let t = SupportSet::new(sup.clone(), n).unwrap();
    let x = signs(n, &sup);
    let cfg = GolfingConfig::with_prefactor(n, 2, 1.0, 60.0).unwrap();
    let mut checked = 0;
    for seed in 0..10 {
        let (a, cert) = golfing_scheme(&spec, &t, &x, &cfg, &mut stream(seed, &[2])).unwrap();
        if !cert.success {
            continue;
        }
        let v = tighten_to_exact(&cert.v, &a, &t, &x).unwrap();
        let r = verify_exact_duality(&v, &a, &t, &x).unwrap();
        assert!(r.pass, "{r:?}");
        let w = certificate_w_norm_check(&cert, 2, DEFAULT_C0).unwrap();
        assert!(w.ratio.is_finite());
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn least_squares_certificate_restricts_to_signs() {
    let mut rng = stream(8, &[]);
    let spec = EnsembleSpec::gaussian(20, 0).unwrap();
    let a = crate::ensembles::build_matrix(&spec, 12, &mut rng).unwrap();
    let x = signs(20, &[2, 11]);
    let t = SupportSet::new(vec![2, 11], 20).unwrap();
    let v = least_squares_certificate(&a, &t, &x).unwrap();
    assert!((v[2] - 1.0).abs() < 1e-10 && (v[11] + 1.0).abs() < 1e-10);
}

#[test]
fn w_norm_requires_success() {
    let cert = DualCertificate {
        v: DVector::zeros(2),
        w: DVector::zeros(1),
        q_norms: vec![1.0],
        batch_log: Vec::new(),
        support: vec![0],
        success: false,
    };
    assert!(certificate_w_norm_check(&cert, 1, DEFAULT_C0).is_err());
}
