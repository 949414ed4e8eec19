//! Draws a few rows from each measurement ensemble and prints their
//! coherence and isotropy.

use ripless::ensembles::{build_matrix, deterministic_coherence, isotropy_check, EnsembleSpec};
use ripless::rng::stream;

fn main() -> ripless::Result<()> {
    let n = 16;
    let specs = [
        EnsembleSpec::gaussian(n, 0)?,
        EnsembleSpec::binary(n, 0)?,
        EnsembleSpec::subsampled_dft(n, 0)?,
        EnsembleSpec::hadamard(n, 0)?,
        EnsembleSpec::coordinate_sampling(n, 0)?,
        EnsembleSpec::random_convolution_from_seed(n, 3, 0)?,
    ];
    for spec in &specs {
        let a = build_matrix(spec, 8, &mut stream(1, &[]))?;
        let dev = isotropy_check(spec, 20_000, &mut stream(2, &[]))?;
        let mu = deterministic_coherence(spec).map(|r| format!("{:.3}", r.mu)).unwrap_or_else(|_| "unbounded".into());
        println!("{:<22} {:?} {}x{}  mu {mu:<9}  |E aa* - I| ~ {dev:.4}", spec.family().name(), a.field(), a.nrows(), a.ncols());
    }
    Ok(())
}
