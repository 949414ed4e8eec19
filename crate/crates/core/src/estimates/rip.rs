use itertools::Itertools;
use nalgebra::{ComplexField, DMatrix};
use rand::seq::index::sample;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::deviation_from_identity;
use crate::model::{Entries, MeasurementMatrix, SupportSet};
use crate::rng::stream;

/// Largest candidate count for exhaustive weak-RIP search.
pub const EXHAUSTIVE_LIMIT: u128 = 100_000;
/// Largest subset count for [`rip_constant_exact`].
pub const RIP_SUBSET_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RipMode {
    Exhaustive,
    /// `budget` uniformly drawn sets `R` from stream `seed`. When the budget
    /// covers every candidate the search is exhaustive instead.
    Sampled { budget: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakRipReport {
    /// `max_R ‖A_{T∪R}*A_{T∪R} − I‖` over the candidates checked.
    pub max_deviation: f64,
    /// The maximizing `R`.
    pub witness: Vec<usize>,
    pub candidates_checked: usize,
    /// True when not every `R` was checked, so `max_deviation` only bounds
    /// the supremum from below.
    pub lower_bound_estimate: bool,
    pub delta: f64,
    /// `max_deviation ≤ delta`.
    pub holds: bool,
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

enum Gram {
    Real(DMatrix<f64>),
    Complex(DMatrix<nalgebra::Complex<f64>>),
}

impl Gram {
    fn of(a: &MeasurementMatrix) -> Self {
        match a.entries() {
            Entries::Real(m) => Gram::Real(m.tr_mul(m)),
            Entries::Complex(m) => Gram::Complex(m.ad_mul(m)),
        }
    }

    fn deviation(&self, idx: &[usize]) -> f64 {
        fn sub<T: ComplexField<RealField = f64>>(g: &DMatrix<T>, idx: &[usize]) -> f64 {
            let k = idx.len();
            deviation_from_identity(&DMatrix::from_fn(k, k, |r, c| g[(idx[r], idx[c])].clone()))
        }
        match self {
            Gram::Real(g) => sub(g, idx),
            Gram::Complex(g) => sub(g, idx),
        }
    }
}

/// Largest deviation from isometry of `A` on vectors supported on `T ∪ R`,
/// `|R| = r`, `R ⊂ T^c`.
pub fn weak_rip_empirical(a: &MeasurementMatrix, t: &SupportSet, r: usize, delta: f64, mode: RipMode) -> Result<WeakRipReport> {
    let n = a.ncols();
    if t.ambient_dim() != n {
        return Err(Error::DimensionMismatch("support must live in dimension n".into()));
    }
    if t.len() + r > n {
        return Err(Error::InvalidArgument(format!("|T| + r = {} exceeds n = {n}", t.len() + r)));
    }
    let rest = t.complement().indices().to_vec();
    let count = binomial(rest.len(), r);
    let exhaustive = match mode {
        RipMode::Exhaustive => {
            if count > EXHAUSTIVE_LIMIT {
                return Err(Error::BudgetExceeded { count, limit: EXHAUSTIVE_LIMIT });
            }
            true
        }
        RipMode::Sampled { budget, .. } => budget as u128 >= count,
    };
    let gram = Gram::of(a);
    let eval = |rset: &[usize]| {
        let mut idx: Vec<usize> = t.indices().to_vec();
        idx.extend_from_slice(rset);
        gram.deviation(&idx)
    };
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut checked = 0;
    let mut consider = |rset: Vec<usize>| {
        let d = eval(&rset);
        checked += 1;
        if d > best.0 {
            best = (d, rset);
        }
    };
    if exhaustive {
        for combo in rest.iter().copied().combinations(r) {
            consider(combo);
        }
    } else if let RipMode::Sampled { budget, seed } = mode {
        let mut rng = stream(seed, &[]);
        for _ in 0..budget {
            let mut rset: Vec<usize> = sample(&mut rng, rest.len(), r).into_iter().map(|k| rest[k]).collect();
            rset.sort_unstable();
            consider(rset);
        }
    }
    let (max_deviation, witness) = if checked == 0 { (eval(&[]), Vec::new()) } else { best };
    Ok(WeakRipReport {
        max_deviation,
        witness,
        candidates_checked: checked,
        lower_bound_estimate: !exhaustive,
        delta,
        holds: max_deviation <= delta,
    })
}

/// The restricted isometry constant `δ_s`: the largest
/// `max(1 − λ_min, λ_max − 1)` of `A_S*A_S` over all `s`-subsets `S`.
pub fn rip_constant_exact(a: &MeasurementMatrix, s: usize) -> Result<f64> {
    let n = a.ncols();
    if s == 0 || s > n {
        return Err(Error::InvalidArgument(format!("need 1 <= s <= n, got s={s} n={n}")));
    }
    let count = binomial(n, s);
    if count > RIP_SUBSET_LIMIT {
        return Err(Error::BudgetExceeded { count, limit: RIP_SUBSET_LIMIT });
    }
    let gram = Gram::of(a);
    Ok((0..n).combinations(s).map(|idx| gram.deviation(&idx)).fold(0.0, f64::max))
}
