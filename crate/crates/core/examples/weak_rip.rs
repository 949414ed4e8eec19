//! Weak restricted isometry around a fixed support, exhaustively and by
//! sampling, plus the exact RIP constant of a small matrix.

use ripless::ensembles::{build_matrix, EnsembleSpec};
use ripless::estimates::{rip_constant_exact, weak_rip_empirical, RipMode};
use ripless::model::SupportSet;
use ripless::rng::stream;

fn main() -> ripless::Result<()> {
    let n = 32;
    let a = build_matrix(&EnsembleSpec::binary(n, 0)?, 400, &mut stream(4, &[]))?;
    let t = SupportSet::new(vec![0, 5, 9], n)?;
    for mode in [RipMode::Exhaustive, RipMode::Sampled { budget: 50, seed: 1 }] {
        let r = weak_rip_empirical(&a, &t, 2, 0.5, mode)?;
        println!(
            "{mode:?}: max deviation {:.4} at R = {:?} over {} sets (lower bound only: {})",
            r.max_deviation, r.witness, r.candidates_checked, r.lower_bound_estimate
        );
    }
    let small = build_matrix(&EnsembleSpec::gaussian(10, 0)?, 30, &mut stream(5, &[]))?;
    println!("exact delta_3 of a 30x10 Gaussian matrix: {:.4}", rip_constant_exact(&small, 3)?);
    Ok(())
}
