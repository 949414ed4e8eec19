use rayon::prelude::*;

use ripless::certificates::{certificate_w_norm_check, golfing_scheme, GolfingConfig, DEFAULT_C0};
use ripless::ensembles::EnsembleSpec;
use ripless::harness::{run_certificate_rate, ExperimentConfig, SignalModel};
use ripless::rng::stream;

fn rate_config(n: usize, s: usize, m: &[usize], trials: usize) -> ExperimentConfig {
    let text = format!(
        r#"{{"kind": "certificate_rate", "ensemble": {{"family": "gaussian", "n": {n}}},
            "grid": {{"n": [{n}], "s": [{s}], "m": {m:?}}}, "trials": {trials}, "seed": 17}}"#
    );
    ExperimentConfig::from_json_str(&text).unwrap()
}

#[test]
fn success_rate_grows_with_rows() {
    let cfg = rate_config(64, 2, &[300, 1500, 5000], 40);
    let r = run_certificate_rate(&cfg).unwrap();
    let rates: Vec<f64> = r.records.iter().map(|c| c.metric("success_rate").unwrap()).collect();
    assert!(rates[0] <= rates[1] + 0.1 && rates[1] <= rates[2] + 0.1, "{rates:?}");
    assert!(rates[2] > rates[0], "{rates:?}");
    for c in &r.records {
        assert_eq!(c.metric("soundness_violations"), Some(0.0));
        assert_eq!(c.metric("unrecovered_successes"), Some(0.0));
    }
}

#[test]
fn single_spike_cell_is_trivial() {
    let r = run_certificate_rate(&rate_config(32, 1, &[2000], 20)).unwrap();
    assert!(r.records[0].metric("success_rate").unwrap() >= 0.9, "{:?}", r.records[0]);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn w_norm_ratio_stable_in_n() {
    let s = 1;
    let ratio_at = |n: usize| {
        let m = (400.0 * s as f64 * (n as f64).ln()).ceil() as usize;
        let cfg = GolfingConfig::with_total_rows(n, s, m).unwrap();
        let spec = EnsembleSpec::gaussian(n, 0).unwrap();
        let ratios: Vec<f64> = (0..30u64)
            .into_par_iter()
            .filter_map(|seed| {
                let mut rng = stream(seed, &[n as u64]);
                let x = SignalModel::Sign.plant(n, s, &mut rng).unwrap();
                let (_, cert) = golfing_scheme(&spec, &x.support(), &x, &cfg, &mut rng).unwrap();
                cert.success.then(|| certificate_w_norm_check(&cert, s, DEFAULT_C0).unwrap().ratio)
            })
            .collect();
        assert!(ratios.len() >= 10, "only {} successes at n={n}", ratios.len());
        median(ratios)
    };
    let (small, large) = (ratio_at(128), ratio_at(512));
    assert!(large <= 2.0 * small && small <= 2.0 * large, "{small} vs {large}");
}
