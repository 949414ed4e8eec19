//! Builds a dual certificate with the golfing scheme and checks it.

use ripless::certificates::{golfing_scheme, verify_inexact_duality, GolfingConfig};
use ripless::ensembles::EnsembleSpec;
use ripless::harness::SignalModel;
use ripless::rng::stream;

fn main() -> ripless::Result<()> {
    let (n, s) = (64, 1);
    let m = (400.0 * s as f64 * (n as f64).ln()).ceil() as usize;
    let cfg = GolfingConfig::with_total_rows(n, s, m)?;
    println!("stages {}  batch sizes {:?}", cfg.ell, cfg.batch_sizes);

    let mut rng = stream(3, &[]);
    let x = SignalModel::Sign.plant(n, s, &mut rng)?;
    let t = x.support();
    let (a, cert) = golfing_scheme(&EnsembleSpec::gaussian(n, 0)?, &t, &x, &cfg, &mut rng)?;
    println!("success {}  rows {}  batches {}", cert.success, cert.rows_used(), cert.batches_used());
    println!("|q_i|_2: {:?}", cert.q_norms.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>());
    for b in &cert.batch_log {
        println!("  stage {} rows {:>5} accepted {:<5} contraction {:.3}", b.stage, b.rows, b.accepted, b.contraction);
    }
    if cert.success {
        let report = verify_inexact_duality(&cert.v, &a, &t, &x)?;
        println!("inexact duality: {}", report.pass);
    }
    Ok(())
}
