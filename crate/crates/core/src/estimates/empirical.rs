use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{clopper_pearson, tail_bound, Estimate, TailBoundQuery};
use crate::ensembles::{build_matrix, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linalg::deviation_from_identity;
use crate::model::{SupportSet, C64};
use crate::rng::stream;

/// Monte Carlo frequency of an event next to its closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalReport {
    pub trials: usize,
    pub failures: usize,
    pub empirical_rate: f64,
    pub theoretical_bound: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// The bound lies at or above the lower 95% confidence limit, i.e. the
    /// data do not contradict it.
    pub pass: bool,
}

impl EmpiricalReport {
    pub fn from_counts(failures: usize, trials: usize, bound: f64) -> Self {
        let (ci_lower, ci_upper) = clopper_pearson(failures, trials);
        EmpiricalReport {
            trials,
            failures,
            empirical_rate: failures as f64 / trials as f64,
            theoretical_bound: bound,
            ci_lower,
            ci_upper,
            pass: ci_lower <= bound,
        }
    }
}

/// One event to estimate: `which` at deviation `level` for `m` rows of
/// `ensemble`, on support `support`. E2 and E3 need the fixed vector `v`.
#[derive(Debug, Clone)]
pub struct EventQuery<'a> {
    pub which: Estimate,
    pub ensemble: &'a EnsembleSpec,
    pub m: usize,
    pub support: &'a SupportSet,
    pub v: Option<&'a DVector<f64>>,
    pub level: f64,
    /// Coherence used in the closed-form bound.
    pub mu: f64,
}

impl EventQuery<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.ensemble.n();
        if self.m == 0 {
            return Err(Error::InvalidArgument("m must be >= 1".into()));
        }
        if self.support.ambient_dim() != n || self.support.is_empty() {
            return Err(Error::InvalidArgument("support must be nonempty and live in dimension n".into()));
        }
        if let Some(v) = self.v {
            if v.len() != n {
                return Err(Error::DimensionMismatch("v must have length n".into()));
            }
            if (0..n).any(|i| v[i] != 0.0 && !self.support.contains(i)) {
                return Err(Error::InvalidArgument("v must be supported on T".into()));
            }
            if v.norm() == 0.0 {
                return Err(Error::InvalidArgument("v must be nonzero".into()));
            }
        } else if matches!(self.which, Estimate::E2 | Estimate::E3) {
            return Err(Error::InvalidArgument(format!("{} needs a fixed vector v", self.which)));
        }
        Ok(())
    }

    fn tail_query(&self) -> Result<TailBoundQuery> {
        TailBoundQuery::new(self.which, self.m, self.support.len(), self.ensemble.n(), self.mu, self.level)
    }

    /// Whether the event occurs for matrix `a` (rows `a_k*/√m`).
    pub(crate) fn occurs(&self, a: &DMatrix<C64>) -> bool {
        let t = self.support.indices();
        let n = a.ncols();
        match self.which {
            Estimate::E1 => {
                let a_t = a.select_columns(t);
                deviation_from_identity(&a_t.ad_mul(&a_t)) >= self.level
            }
            Estimate::E2 | Estimate::E3 => {
                let v = self.v.expect("validated").map(|x| C64::new(x, 0.0));
                let vn = v.norm();
                let g = a.ad_mul(&(a * &v));
                if self.which == Estimate::E2 {
                    (g - &v).norm() >= self.level * vn
                } else {
                    (0..n).filter(|&i| !self.support.contains(i)).map(|i| g[i].norm()).fold(0.0, f64::max)
                        >= self.level * vn
                }
            }
            Estimate::E4 => {
                let a_t = a.select_columns(t);
                let cross = a_t.ad_mul(a);
                (0..n).filter(|&i| !self.support.contains(i)).map(|i| cross.column(i).norm()).fold(0.0, f64::max)
                    >= self.level
            }
        }
    }
}

/// Draws `trials` matrices, trial `k` on stream `(seed, k)`, and counts how
/// often the event occurs.
pub fn empirical_estimate(query: &EventQuery<'_>, trials: usize, seed: u64) -> Result<EmpiricalReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    query.validate()?;
    let bound = tail_bound(&query.tail_query()?)?.value;
    let hits: Vec<bool> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, &[k]);
            build_matrix(query.ensemble, query.m, &mut rng).map(|a| query.occurs(&a.to_complex()))
        })
        .collect::<Result<_>>()?;
    Ok(EmpiricalReport::from_counts(hits.iter().filter(|&&h| h).count(), trials, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Binomial, Discrete};

    #[test]
    fn e1_gaussian_below_bound() {
        let spec = EnsembleSpec::gaussian(32, 0).unwrap();
        let t = SupportSet::new(vec![0, 5, 9, 30], 32).unwrap();
        let q = EventQuery { which: Estimate::E1, ensemble: &spec, m: 512, support: &t, v: None, level: 0.5, mu: 1.0 };
        let r = empirical_estimate(&q, 500, 7).unwrap();
        assert_eq!(r.trials, 500);
        // with μ = 1 the bound does not apply to Gaussians; the event is
        // still rare at this sampling rate
        assert!(r.empirical_rate <= 0.05, "{r:?}");
    }

    #[test]
    fn degenerate_single_row() {
        let spec = EnsembleSpec::coordinate_sampling(4, 0).unwrap();
        let t = SupportSet::new(vec![1], 4).unwrap();
        let q = EventQuery { which: Estimate::E1, ensemble: &spec, m: 1, support: &t, v: None, level: 0.5, mu: 4.0 };
        let r = empirical_estimate(&q, 100, 1).unwrap();
        // ‖A_T*A_T − I‖ is 3 or 1, always ≥ 1/2
        assert_eq!(r.failures, 100);
        let q0 = EventQuery { m: 0, ..q.clone() };
        assert!(empirical_estimate(&q0, 10, 1).is_err());
    }

    #[test]
    fn coordinate_sampling_matches_binomial() {
        // a = √n e_i: A*A = (n/m)·diag(counts), so for v = e_j
        // ‖(A*A − I)v‖ = |n·c_j/m − 1| with c_j ~ Binomial(m, 1/n),
        // and A_{T^c}*Av = 0.
        let (n, m, t) = (8usize, 24usize, 0.5);
        let spec = EnsembleSpec::coordinate_sampling(n, 0).unwrap();
        let sup = SupportSet::new(vec![3], n).unwrap();
        let mut v = DVector::zeros(n);
        v[3] = 1.0;
        let trials = 4000;
        let q = EventQuery { which: Estimate::E2, ensemble: &spec, m, support: &sup, v: Some(&v), level: t, mu: n as f64 };
        let r = empirical_estimate(&q, trials, 3).unwrap();
        let binom = Binomial::new(1.0 / n as f64, m as u64).unwrap();
        let exact: f64 =
            (0..=m as u64).filter(|&c| (n as f64 * c as f64 / m as f64 - 1.0).abs() >= t).map(|c| binom.pmf(c)).sum();
        let (lo, hi) = clopper_pearson(r.failures, trials);
        assert!(lo - 0.01 <= exact && exact <= hi + 0.01, "exact {exact} vs [{lo}, {hi}]");

        let q3 = EventQuery { which: Estimate::E3, ..q };
        assert_eq!(empirical_estimate(&q3, 200, 3).unwrap().failures, 0);
    }

    #[test]
    fn missing_vector_rejected() {
        let spec = EnsembleSpec::gaussian(8, 0).unwrap();
        let t = SupportSet::new(vec![1], 8).unwrap();
        let q = EventQuery { which: Estimate::E3, ensemble: &spec, m: 10, support: &t, v: None, level: 0.5, mu: 1.0 };
        assert!(empirical_estimate(&q, 10, 0).is_err());
        let mut off = DVector::zeros(8);
        off[2] = 1.0;
        let q = EventQuery { v: Some(&off), ..q };
        assert!(empirical_estimate(&q, 10, 0).is_err());
    }

    #[test]
    fn deterministic_across_runs() {
        let spec = EnsembleSpec::binary(16, 0).unwrap();
        let t = SupportSet::new(vec![0, 1], 16).unwrap();
        let q = EventQuery { which: Estimate::E4, ensemble: &spec, m: 20, support: &t, v: None, level: 0.6, mu: 1.0 };
        let a = empirical_estimate(&q, 300, 11).unwrap();
        let b = empirical_estimate(&q, 300, 11).unwrap();
        assert_eq!(a, b);
    }
}
