//! Least-squares dual certificate on a small instance: inexact conditions,
//! then tightened to an exact certificate.

use ripless::certificates::{least_squares_certificate, tighten_to_exact, verify_exact_duality, verify_inexact_duality};
use ripless::ensembles::{build_matrix, EnsembleSpec};
use ripless::harness::SignalModel;
use ripless::rng::stream;

fn main() -> ripless::Result<()> {
    let (n, s, m) = (40, 2, 30);
    let mut rng = stream(9, &[]);
    let x = SignalModel::Sign.plant(n, s, &mut rng)?;
    let t = x.support();
    let a = build_matrix(&EnsembleSpec::gaussian(n, 0)?, m, &mut rng)?;
    let v = least_squares_certificate(&a, &t, &x)?;
    println!("{}", serde_json::to_string_pretty(&verify_inexact_duality(&v, &a, &t, &x)?).unwrap());
    let exact = tighten_to_exact(&v, &a, &t, &x)?;
    println!("{}", serde_json::to_string_pretty(&verify_exact_duality(&exact, &a, &t, &x)?).unwrap());
    Ok(())
}
