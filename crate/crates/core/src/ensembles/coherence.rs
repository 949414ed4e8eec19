use nalgebra::DMatrix;
use serde::Serialize;
use statrs::function::erf::erfc;

use super::{sample_row, EnsembleSpec, Family};
use crate::error::{Error, Result};
use crate::linalg::deviation_from_identity;
use crate::model::C64;
use crate::rng::Rng;

const SEARCH_LIMIT: f64 = 1e6;
const SEARCH_REL_TOL: f64 = 1e-6;
const QUAD_ABS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceMode {
    Deterministic,
    Stochastic,
}

/// Evaluated stochastic incoherence conditions at the returned `μ`.
#[derive(Debug, Clone, Serialize)]
pub struct StochasticConditions {
    /// Upper bound on `E[n⁻¹‖a‖² 1{max|a[t]|² > μ}]`.
    pub excess_moment: f64,
    /// `(1/20) n^{-3/2}`.
    pub excess_moment_threshold: f64,
    /// Upper bound on `P(max|a[t]|² > μ)`.
    pub exceed_probability: f64,
    /// `(nm)⁻¹`.
    pub exceed_probability_threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceReport {
    pub mu: f64,
    pub mode: CoherenceMode,
    pub conditions: Option<StochasticConditions>,
}

/// Exact coherence for families with an almost-sure entry bound.
pub fn deterministic_coherence(spec: &EnsembleSpec) -> Result<CoherenceReport> {
    let mu = match spec.family() {
        Family::Binary | Family::SubsampledDft | Family::ContinuousFourier => 1.0,
        Family::SubsampledOrthogonal { u } => u.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max),
        Family::RandomConvolution { g, .. } => g.iter().map(|v| v * v).fold(0.0, f64::max),
        Family::CoordinateSampling => spec.n() as f64,
        Family::Gaussian => {
            return Err(Error::UnsupportedFamily {
                family: "gaussian".into(),
                reason: "entries are unbounded; use stochastic_coherence".into(),
            })
        }
    };
    Ok(CoherenceReport { mu, mode: CoherenceMode::Deterministic, conditions: None })
}

/// A tail bound `f(t) ≥ P(max_t |a[t]|² ≥ t)`, optionally paired with a
/// sharper direct bound on `E[‖a‖² 1{max|a[t]|² > μ}]`.
///
/// Without the direct bound the excess moment is bounded by
/// `nμf(μ) + n∫_μ^∞ f(t) dt`.
pub struct TailModel<'a> {
    tail: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    excess_moment: Option<Box<dyn Fn(f64) -> f64 + Sync + 'a>>,
}

impl<'a> TailModel<'a> {
    pub fn new(tail: impl Fn(f64) -> f64 + Sync + 'a) -> Self {
        TailModel { tail: Box::new(tail), excess_moment: None }
    }

    pub fn with_excess_moment(mut self, bound: impl Fn(f64) -> f64 + Sync + 'a) -> Self {
        self.excess_moment = Some(Box::new(bound));
        self
    }

    /// iid N(0,1) entries: `f(t) = 2n·P(Z ≥ √t)`, with the closed-form
    /// excess moment `n·(2n·P(Z > √μ) + 2√μ·φ(√μ))`.
    pub fn gaussian(n: usize) -> TailModel<'static> {
        let nf = n as f64;
        TailModel::new(move |t| (2.0 * nf * gaussian_tail(t.max(0.0).sqrt())).min(1.0)).with_excess_moment(move |mu| {
            let r = mu.max(0.0).sqrt();
            let phi = (-0.5 * mu).exp() / (2.0 * std::f64::consts::PI).sqrt();
            nf * (2.0 * nf * gaussian_tail(r) + 2.0 * r * phi)
        })
    }

    /// Rows bounded by `mu_det` almost surely.
    pub fn bounded(mu_det: f64) -> TailModel<'static> {
        TailModel::new(move |t| if t > mu_det { 0.0 } else { 1.0 })
    }

    pub fn tail(&self, t: f64) -> f64 {
        (self.tail)(t)
    }

    fn excess(&self, n: f64, mu: f64) -> f64 {
        match &self.excess_moment {
            Some(b) => b(mu),
            None => n * mu * self.tail(mu) + n * integrate_to_infinity(&*self.tail, mu, QUAD_ABS_TOL),
        }
    }
}

/// `P(Z ≥ x)` for standard normal `Z`, via erfc so that large `x` does not
/// underflow to a misleading zero before it has to.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Smallest `μ ∈ [1, 10⁶]` (to 1e-6 relative) such that
/// `E[‖a‖² 1_{E^c}] ≤ (1/20) n^{-1/2}` and `f(μ) ≤ (nm)⁻¹`.
pub fn stochastic_coherence(spec: &EnsembleSpec, m: usize, model: &TailModel<'_>) -> Result<CoherenceReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    let n = spec.n() as f64;
    let moment_cap = (1.0 / 20.0) * n.powf(-0.5);
    let prob_cap = 1.0 / (n * m as f64);
    let ok = |mu: f64| model.tail(mu) <= prob_cap && model.excess(n, mu) <= moment_cap;
    let report = |mu: f64| CoherenceReport {
        mu,
        mode: CoherenceMode::Stochastic,
        conditions: Some(StochasticConditions {
            excess_moment: model.excess(n, mu) / n,
            excess_moment_threshold: moment_cap / n,
            exceed_probability: model.tail(mu),
            exceed_probability_threshold: prob_cap,
        }),
    };
    if !ok(SEARCH_LIMIT) {
        return Err(Error::NoValidCoherence { limit: SEARCH_LIMIT });
    }
    if ok(1.0) {
        return Ok(report(1.0));
    }
    let (mut lo, mut hi) = (1.0, SEARCH_LIMIT);
    while hi - lo > SEARCH_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(report(hi))
}

/// `∫_a^∞ f(t) dt` by adaptive Simpson on `t = a + u/(1−u)`.
pub(crate) fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - u;
        let v = f(a + u / w) / (w * w);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // split so a discontinuity near `a` cannot hide between samples
    let pieces = 16;
    let rough: f64 = (0..=64).map(|i| g(i as f64 / 64.0)).sum::<f64>() / 65.0;
    let tol = tol.min(1e-10 * rough.abs()).max(f64::MIN_POSITIVE);
    (0..pieces)
        .map(|i| {
            let (l, r) = (i as f64 / pieces as f64, (i + 1) as f64 / pieces as f64);
            adaptive_simpson(&g, l, r, tol / pieces as f64)
        })
        .sum()
}

pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `‖(1/N) Σ a_k a_k* − I‖` over `num_samples` fresh rows.
pub fn isotropy_check(spec: &EnsembleSpec, num_samples: usize, rng: &mut Rng) -> Result<f64> {
    if num_samples == 0 {
        return Err(Error::InvalidArgument("num_samples must be >= 1".into()));
    }
    let n = spec.n();
    let mut acc = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for _ in 0..num_samples {
        let a = sample_row(spec, rng);
        acc.ger(C64::new(1.0, 0.0), &a, &a.map(|v| v.conj()), C64::new(1.0, 0.0));
    }
    acc /= C64::new(num_samples as f64, 0.0);
    Ok(deviation_from_identity(&acc))
}

/// `‖W − I‖` and whether it is within the near-isotropy level `1/(8√n)`.
pub fn near_isotropy_deviation(w: &DMatrix<C64>) -> Result<(f64, bool)> {
    let n = w.nrows();
    if n == 0 || w.ncols() != n {
        return Err(Error::InvalidArgument("W must be square and nonempty".into()));
    }
    let diff = w - DMatrix::<C64>::identity(n, n);
    let dev = crate::linalg::operator_norm(&diff);
    Ok((dev, dev <= 1.0 / (8.0 * (n as f64).sqrt())))
}

/// Monte Carlo estimate of `E[aa* | max_t |a[t]|² ≤ μ]` from rows that
/// pass the truncation. Returns the estimate and the accepted count.
pub fn conditional_second_moment(spec: &EnsembleSpec, mu: f64, samples: usize, rng: &mut Rng) -> (DMatrix<C64>, usize) {
    let n = spec.n();
    let mut acc = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let mut kept = 0usize;
    for _ in 0..samples {
        let a = sample_row(spec, rng);
        if a.iter().all(|v| v.norm_sqr() <= mu) {
            acc.ger(C64::new(1.0, 0.0), &a, &a.map(|v| v.conj()), C64::new(1.0, 0.0));
            kept += 1;
        }
    }
    if kept > 0 {
        acc /= C64::new(kept as f64, 0.0);
    }
    (acc, kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn deterministic_values() {
        assert_eq!(deterministic_coherence(&EnsembleSpec::subsampled_dft(32, 0).unwrap()).unwrap().mu, 1.0);
        assert_eq!(deterministic_coherence(&EnsembleSpec::coordinate_sampling(64, 0).unwrap()).unwrap().mu, 64.0);
        let h = deterministic_coherence(&EnsembleSpec::hadamard(16, 0).unwrap()).unwrap().mu;
        assert!((h - 1.0).abs() < 1e-12);
        assert!(matches!(
            deterministic_coherence(&EnsembleSpec::gaussian(8, 0).unwrap()),
            Err(Error::UnsupportedFamily { .. })
        ));
    }

    #[test]
    fn deterministic_at_least_one() {
        for spec in [
            EnsembleSpec::binary(4, 0).unwrap(),
            EnsembleSpec::continuous_fourier(4, 0).unwrap(),
            EnsembleSpec::random_convolution_from_seed(16, 3, 0).unwrap(),
            EnsembleSpec::subsampled_orthogonal(super::super::dft_matrix(5), 0).unwrap(),
        ] {
            assert!(deterministic_coherence(&spec).unwrap().mu >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn gaussian_stochastic_coherence_within_six_log_n() {
        let spec = EnsembleSpec::gaussian(64, 0).unwrap();
        for m in [16, 32, 64] {
            let r = stochastic_coherence(&spec, m, &TailModel::gaussian(64)).unwrap();
            assert!(r.mu <= 6.0 * (64f64).ln(), "m={m}: mu={}", r.mu);
            let c = r.conditions.unwrap();
            assert!(c.excess_moment <= c.excess_moment_threshold);
            assert!(c.exceed_probability <= c.exceed_probability_threshold);
        }
    }

    #[test]
    fn bounded_tail_returns_deterministic_value() {
        let spec = EnsembleSpec::binary(16, 0).unwrap();
        let r = stochastic_coherence(&spec, 16, &TailModel::bounded(3.5)).unwrap();
        assert!((r.mu - 3.5).abs() <= 1e-5 * 3.5, "{}", r.mu);
        let r = stochastic_coherence(&spec, 16, &TailModel::bounded(0.5)).unwrap();
        assert_eq!(r.mu, 1.0);
    }

    #[test]
    fn subexponential_tail_matches_independent_root_find() {
        let (n, m) = (256usize, 128usize);
        let nf = n as f64;
        let spec = EnsembleSpec::gaussian(n, 0).unwrap();
        let r = stochastic_coherence(&spec, m, &TailModel::new(move |t: f64| nf * (-t.sqrt()).exp())).unwrap();

        // closed form: ∫_μ^∞ n e^{−√t} dt = 2n(√μ + 1)e^{−√μ}; bisection on the
        // two conditions written out by hand
        let cond = |mu: f64| {
            let f = nf * (-mu.sqrt()).exp();
            let moment = nf * mu * f + nf * 2.0 * nf * (mu.sqrt() + 1.0) * (-mu.sqrt()).exp();
            f <= 1.0 / (nf * m as f64) && moment <= 0.05 / nf.sqrt()
        };
        let (mut lo, mut hi) = (1.0f64, 1e6f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cond(mid) {
                hi = mid
            } else {
                lo = mid
            }
        }
        assert!(r.mu.is_finite());
        assert!((r.mu - hi).abs() <= 2e-6 * hi, "{} vs {}", r.mu, hi);
    }

    #[test]
    fn larger_tail_never_gives_smaller_mu() {
        let spec = EnsembleSpec::gaussian(64, 0).unwrap();
        let base = stochastic_coherence(&spec, 64, &TailModel::new(|t: f64| 64.0 * (-t.sqrt()).exp())).unwrap().mu;
        let bigger = stochastic_coherence(&spec, 64, &TailModel::new(|t: f64| 128.0 * (-t.sqrt()).exp())).unwrap().mu;
        assert!(bigger >= base);
    }

    #[test]
    fn heavy_tail_has_no_valid_coherence() {
        let spec = EnsembleSpec::gaussian(16, 0).unwrap();
        let r = stochastic_coherence(&spec, 16, &TailModel::new(|t: f64| (1.0 / t).min(1.0)));
        assert!(matches!(r, Err(Error::NoValidCoherence { .. })));
    }

    #[test]
    fn quadrature_accuracy() {
        let v = integrate_to_infinity(&|t: f64| (-t).exp(), 2.0, 1e-12);
        assert!((v - (-2.0f64).exp()).abs() < 1e-9);
        let v = integrate_to_infinity(&|t: f64| (-t.sqrt()).exp(), 4.0, 1e-12);
        assert!((v - 2.0 * 3.0 * (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn gaussian_tail_does_not_underflow_early() {
        assert!(gaussian_tail(30.0) > 0.0);
        assert!((gaussian_tail(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn isotropy_small_for_binary_and_dft() {
        for spec in [EnsembleSpec::binary(8, 0).unwrap(), EnsembleSpec::subsampled_dft(8, 0).unwrap()] {
            let dev = isotropy_check(&spec, 50_000, &mut stream(21, &[])).unwrap();
            assert!(dev <= 0.1, "{dev}");
        }
    }

    #[test]
    fn coordinate_sampling_isotropy_improves_with_samples() {
        let spec = EnsembleSpec::coordinate_sampling(8, 0).unwrap();
        let small = isotropy_check(&spec, 1_000, &mut stream(1, &[])).unwrap();
        let large = isotropy_check(&spec, 200_000, &mut stream(2, &[])).unwrap();
        assert!(large < small && large < 0.05, "{small} {large}");
    }

    #[test]
    fn isotropy_deviation_decreases_with_samples() {
        let spec = EnsembleSpec::binary(8, 0).unwrap();
        let wins = (0..100u64)
            .filter(|&r| {
                let small = isotropy_check(&spec, 1_000, &mut stream(r, &[0])).unwrap();
                let large = isotropy_check(&spec, 40_000, &mut stream(r, &[1])).unwrap();
                large < small
            })
            .count();
        assert!(wins >= 90, "{wins}");
    }

    #[test]
    fn near_isotropy_thresholds() {
        let n = 16;
        let eye = DMatrix::<C64>::identity(n, n);
        assert_eq!(near_isotropy_deviation(&eye).unwrap(), (0.0, true));
        let scale = 1.0 + 1.0 / (4.0 * (n as f64).sqrt());
        let (dev, pass) = near_isotropy_deviation(&(eye * C64::new(scale, 0.0))).unwrap();
        assert!((dev - 1.0 / 16.0).abs() < 1e-12);
        assert!(!pass);
    }
}
