//! Monte Carlo frequency of the E1 event against its closed-form bound.

use ripless::ensembles::EnsembleSpec;
use ripless::estimates::{empirical_estimate, Estimate, EventQuery};
use ripless::model::SupportSet;

fn main() -> ripless::Result<()> {
    let n = 64;
    let support = SupportSet::new(vec![1, 20, 33], n)?;
    let spec = EnsembleSpec::subsampled_dft(n, 0)?;
    for m in [50, 200, 800] {
        let q = EventQuery { which: Estimate::E1, ensemble: &spec, m, support: &support, v: None, level: 0.5, mu: 1.0 };
        let r = empirical_estimate(&q, 400, 1)?;
        println!(
            "m {m:>4}: {:>3}/{} failures, 95% CI [{:.4}, {:.4}], bound {:.4}, consistent {}",
            r.failures, r.trials, r.ci_lower, r.ci_upper, r.theoretical_bound, r.pass
        );
    }
    Ok(())
}
