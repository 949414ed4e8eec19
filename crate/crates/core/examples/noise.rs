//! How often the correlation of the noise with the columns exceeds the
//! threshold used to set the penalty.

use ripless::ensembles::{build_matrix, EnsembleSpec};
use ripless::estimates::{noise_correlation_bound, noise_exceedance};
use ripless::model::SupportSet;
use ripless::rng::stream;

fn main() -> ripless::Result<()> {
    let n = 128;
    let a = build_matrix(&EnsembleSpec::gaussian(n, 0)?, 300, &mut stream(8, &[]))?;
    let t = SupportSet::new(vec![3, 50, 77], n)?;
    for (projected, support) in [(false, None), (true, Some(&t))] {
        let threshold = noise_correlation_bound(&a, 1.0, projected, support)?;
        let r = noise_exceedance(&a, 1.0, projected, support, 5000, 2)?;
        println!(
            "projection {projected:<5} threshold {threshold:.3}: {}/{} exceed, bound 1/(2n) = {:.4}, consistent {}",
            r.failures, r.trials, r.theoretical_bound, r.pass
        );
    }
    Ok(())
}
