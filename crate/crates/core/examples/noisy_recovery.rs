//! LASSO and the Dantzig selector on the same noisy instance, with the
//! default penalty and the tube check.

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use ripless::ensembles::{build_matrix, EnsembleSpec};
use ripless::harness::SignalModel;
use ripless::model::MeasurementVector;
use ripless::rng::stream;
use ripless::solvers::{tube_diagnostic, Program, RecoveryProblem, SolverOptions};

fn main() -> ripless::Result<()> {
    let (n, s, m, sigma) = (256, 4, 120, 0.5);
    let mut rng = stream(11, &[]);
    let x = SignalModel::Gaussian.plant(n, s, &mut rng)?;
    let a = build_matrix(&EnsembleSpec::gaussian(n, 0)?, m, &mut rng)?;
    let sigma_m = sigma / (m as f64).sqrt();
    let z = DVector::from_fn(m, |_, _| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
    let y = MeasurementVector::real(a.as_real()? * x.as_vector() + z * sigma_m, sigma_m)?;

    let problem = RecoveryProblem::new(a, y, None)?;
    println!("lambda {:.3}  penalty {:.4}", problem.lambda(), problem.penalty());
    for program in [Program::Lasso, Program::Dantzig] {
        let r = problem.solve(program, &SolverOptions::default())?;
        let tube = tube_diagnostic(problem.matrix(), &r.x_hat, &x, problem.penalty())?;
        println!(
            "{:<8} |e|_2 {:.4}  iterations {:>5}  tube {:.4} <= {:.4}: {}",
            format!("{program:?}"),
            r.error_vector(&x)?.norm(),
            r.iterations,
            tube.value,
            tube.threshold,
            tube.pass
        );
    }
    Ok(())
}
