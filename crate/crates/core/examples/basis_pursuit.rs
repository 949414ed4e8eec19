//! Noiseless recovery of a sparse signal by basis pursuit.

use ripless::ensembles::{build_matrix, EnsembleSpec};
use ripless::harness::SignalModel;
use ripless::rng::stream;
use ripless::solvers::{basis_pursuit, SolverOptions};

fn main() -> ripless::Result<()> {
    let (n, s, m) = (128, 5, 60);
    let mut rng = stream(7, &[]);
    let x = SignalModel::Sign.plant(n, s, &mut rng)?;
    let a = build_matrix(&EnsembleSpec::gaussian(n, 0)?, m, &mut rng)?;
    let y = a.apply(&x)?;
    let r = basis_pursuit(&a, &y, &SolverOptions::default())?;
    println!("support {:?}", x.support().indices());
    println!("recovered {:?}", r.x_hat.support().indices());
    println!("iterations {}  converged {}  |x^ - x|_2 = {:.2e}", r.iterations, r.converged, r.error_vector(&x)?.norm());
    Ok(())
}
