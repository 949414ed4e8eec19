//! Oracle error bounds for LASSO against the realized error as m grows.
//! The bounds carry an unspecified leading constant, printed here at c = 1.

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use ripless::ensembles::{build_matrix, EnsembleSpec};
use ripless::harness::SignalModel;
use ripless::model::MeasurementVector;
use ripless::rng::stream;
use ripless::solvers::{l1_error_bound, l2_error_bound, ErrorBoundInputs, Program, RecoveryProblem, SolverOptions};

fn main() -> ripless::Result<()> {
    let (n, s, sigma) = (128, 3, 0.3);
    for m in [60, 120, 240, 480] {
        let mut rng = stream(5, &[m as u64]);
        let x = SignalModel::Sign.plant(n, s, &mut rng)?;
        let a = build_matrix(&EnsembleSpec::gaussian(n, 0)?, m, &mut rng)?;
        let sigma_m = sigma / (m as f64).sqrt();
        let z = DVector::from_fn(m, |_, _| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
        let y = MeasurementVector::real(a.as_real()? * x.as_vector() + z * sigma_m, sigma_m)?;
        let r = RecoveryProblem::new(a, y, None)?.solve(Program::Lasso, &SolverOptions::default())?;
        let e = r.error_vector(&x)?;
        let inputs = ErrorBoundInputs::new(s, m, n, sigma, 1.0, x)?;
        println!(
            "m {m:>4}  |e|_2 {:.4} (c=1 bound {:.3})  |e|_1 {:.4} (c=1 bound {:.3})",
            e.norm(),
            l2_error_bound(&inputs, Program::Lasso)?,
            e.lp_norm(1),
            l1_error_bound(&inputs, Program::Lasso)?
        );
    }
    Ok(())
}
