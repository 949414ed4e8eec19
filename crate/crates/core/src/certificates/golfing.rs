use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_raw_rows, EnsembleSpec};
use crate::error::{Error, Result};
use crate::model::{ser_vector, sign, Entries, Field, MeasurementMatrix, Provenance, Signal, SupportSet};
use crate::rng::Rng;

/// Batch schedule of the golfing scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GolfingConfig {
    /// Number of batches that must be accepted.
    pub ell: usize,
    /// Rows drawn for each stage; a rejected batch is redrawn at the same size.
    pub batch_sizes: Vec<usize>,
    /// Contraction targets `c_i`.
    pub c: Vec<f64>,
    /// Off-support targets `t_i`.
    pub t: Vec<f64>,
    /// How many rejected batches may be replaced before giving up.
    pub max_extra_batches: usize,
}

/// Default prefactor in `m_i = ⌈prefactor·s·μ·c_i⁻²⌉`.
pub const DEFAULT_PREFACTOR: f64 = 2.0;

impl GolfingConfig {
    /// `ℓ = ⌈log₂(s)/2⌉ + 2`.
    pub fn default_ell(s: usize) -> usize {
        ((s as f64).log2() / 2.0).ceil() as usize + 2
    }

    /// `3⌈log n⌉ + 1`.
    pub fn default_extra_batches(n: usize) -> usize {
        3 * (n as f64).ln().ceil() as usize + 1
    }

    /// `(c_i, t_i)` for `i = 1..=ℓ`.
    pub fn targets(n: usize, s: usize) -> (Vec<f64>, Vec<f64>) {
        let ell = Self::default_ell(s);
        let ln = (n as f64).ln();
        let rs = (s as f64).sqrt();
        let c = (0..ell).map(|i| if i < 2 { 0.5 / ln.sqrt() } else { 0.5 }).collect();
        let t = (0..ell).map(|i| if i < 2 { 1.0 / (8.0 * rs) } else { ln / (8.0 * rs) }).collect();
        (c, t)
    }

    /// Default schedule with `m_i = ⌈prefactor·s·μ·c_i⁻²⌉`.
    pub fn with_prefactor(n: usize, s: usize, mu: f64, prefactor: f64) -> Result<Self> {
        check_dims(n, s)?;
        if !(mu >= 1.0 && prefactor > 0.0 && prefactor.is_finite()) {
            return Err(Error::InvalidArgument("need mu >= 1 and a positive prefactor".into()));
        }
        let (c, t) = Self::targets(n, s);
        let batch_sizes = c.iter().map(|ci| (prefactor * s as f64 * mu / (ci * ci)).ceil() as usize).collect();
        Ok(GolfingConfig {
            ell: c.len(),
            batch_sizes,
            c,
            t,
            max_extra_batches: Self::default_extra_batches(n),
        })
    }

    pub fn new(n: usize, s: usize, mu: f64) -> Result<Self> {
        Self::with_prefactor(n, s, mu, DEFAULT_PREFACTOR)
    }

    /// Splits `m` rows over the `ℓ` stages in proportion to `c_i⁻²`.
    pub fn with_total_rows(n: usize, s: usize, m: usize) -> Result<Self> {
        check_dims(n, s)?;
        let (c, t) = Self::targets(n, s);
        if m < c.len() {
            return Err(Error::InvalidArgument(format!("m = {m} is below the {} required batches", c.len())));
        }
        let weights: Vec<f64> = c.iter().map(|ci| 1.0 / (ci * ci)).collect();
        let total: f64 = weights.iter().sum();
        let mut batch_sizes: Vec<usize> = weights.iter().map(|w| ((m as f64 * w / total).floor() as usize).max(1)).collect();
        let used: usize = batch_sizes.iter().sum();
        if used <= m {
            batch_sizes[0] += m - used;
        }
        Ok(GolfingConfig {
            ell: c.len(),
            batch_sizes,
            c,
            t,
            max_extra_batches: Self::default_extra_batches(n),
        })
    }

    /// Rows used if every batch is accepted on the first draw.
    pub fn planned_rows(&self) -> usize {
        self.batch_sizes.iter().sum()
    }

    fn validate(&self) -> Result<()> {
        if self.ell == 0 || self.batch_sizes.len() != self.ell || self.c.len() != self.ell || self.t.len() != self.ell {
            return Err(Error::InvalidConfig("golfing schedule lengths must all equal ell".into()));
        }
        if self.batch_sizes.contains(&0) {
            return Err(Error::InvalidConfig("batch sizes must be positive".into()));
        }
        Ok(())
    }
}

fn check_dims(n: usize, s: usize) -> Result<()> {
    if n < 2 || s == 0 || s > n {
        return Err(Error::InvalidArgument(format!("need n >= 2 and 1 <= s <= n, got n={n} s={s}")));
    }
    Ok(())
}

/// One sampled batch and the outcome of its two acceptance tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    /// Stage (0-based) the batch was drawn for.
    pub stage: usize,
    pub rows: usize,
    pub accepted: bool,
    /// `‖q_new‖₂ / ‖q‖₂`.
    pub contraction: f64,
    /// `‖update_{T^c}‖_∞ / ‖q‖₂`.
    pub off_support_ratio: f64,
}

/// Output of the golfing scheme: `v = A*w` with its construction log.
#[derive(Debug, Clone, Serialize)]
pub struct DualCertificate {
    #[serde(serialize_with = "ser_vector")]
    pub v: DVector<f64>,
    /// One weight per row of the sensing matrix; zero on rejected batches.
    #[serde(serialize_with = "ser_vector")]
    pub w: DVector<f64>,
    /// `‖q_i‖₂` for `i = 0..=accepted`.
    pub q_norms: Vec<f64>,
    pub batch_log: Vec<BatchRecord>,
    pub support: Vec<usize>,
    pub success: bool,
}

impl DualCertificate {
    /// Total number of sampled rows, rejected batches included.
    pub fn rows_used(&self) -> usize {
        self.w.len()
    }

    pub fn batches_used(&self) -> usize {
        self.batch_log.len()
    }

    /// `‖A*w − v‖₂`.
    pub fn reconstruction_residual(&self, a: &MeasurementMatrix) -> Result<f64> {
        let am = a.as_real()?;
        if am.nrows() != self.w.len() || am.ncols() != self.v.len() {
            return Err(Error::DimensionMismatch("certificate does not match the matrix".into()));
        }
        Ok((am.tr_mul(&self.w) - &self.v).norm())
    }

    /// `‖v_T − sgn(x_T)‖₂ = ‖q_ℓ‖₂` of the last iterate.
    pub fn final_q_norm(&self) -> f64 {
        *self.q_norms.last().expect("q_0 is always recorded")
    }
}

struct Batch {
    rows: DMatrix<f64>,
    /// Weight applied to `rows*·rows_T` (`1/m_i` for raw rows).
    weight: f64,
    samples: usize,
}

struct Run {
    v: DVector<f64>,
    /// Row weights per sampled batch, zero for rejected batches.
    w: Vec<DVector<f64>>,
    q_norms: Vec<f64>,
    log: Vec<BatchRecord>,
    success: bool,
}

fn golf(
    n: usize,
    support: &SupportSet,
    signs: &Signal,
    config: &GolfingConfig,
    mut next: impl FnMut(usize) -> Result<Option<Batch>>,
) -> Result<Run> {
    let t_idx = support.indices();
    let mut q = DVector::from_fn(t_idx.len(), |k, _| sign(signs.as_vector()[t_idx[k]]));
    if q.iter().any(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("sign pattern must be nonzero on the support".into()));
    }
    let in_t: Vec<bool> = (0..n).map(|i| support.contains(i)).collect();
    let mut v = DVector::zeros(n);
    let mut w = Vec::new();
    let mut q_norms = vec![q.norm()];
    let mut log = Vec::new();
    let mut stage = 0;
    let mut extra = 0;
    while stage < config.ell {
        let Some(batch) = next(stage)? else { break };
        let b_t = batch.rows.select_columns(t_idx);
        let p = &b_t * &q * batch.weight;
        let update = batch.rows.tr_mul(&p);
        let q_new = &q - DVector::from_fn(t_idx.len(), |k, _| update[t_idx[k]]);
        let qn = q.norm();
        let off = (0..n).filter(|&i| !in_t[i]).map(|i| update[i].abs()).fold(0.0, f64::max);
        let contraction = q_new.norm() / qn;
        let off_support_ratio = off / qn;
        let accepted = contraction <= config.c[stage] && off_support_ratio <= config.t[stage];
        log.push(BatchRecord { stage, rows: batch.samples, accepted, contraction, off_support_ratio });
        if accepted {
            v += update;
            w.push(p);
            q = q_new;
            q_norms.push(q.norm());
            stage += 1;
        } else {
            w.push(DVector::zeros(p.len()));
            extra += 1;
            if extra > config.max_extra_batches {
                break;
            }
        }
    }
    let off_max = (0..n).filter(|&i| !in_t[i]).map(|i| v[i].abs()).fold(0.0, f64::max);
    let success = stage == config.ell && q.norm() <= 0.25 && off_max <= 0.25;
    Ok(Run { v, w, q_norms, log, success })
}

/// Runs the golfing scheme on freshly drawn batches from `spec`.
///
/// Complex ensembles contribute the real and imaginary parts of each row as
/// two real rows, so the returned matrix is the realified sensing matrix with
/// `1/√m` scaling, `m` counting every sampled row including rejected batches.
pub fn golfing_scheme(
    spec: &EnsembleSpec,
    support: &SupportSet,
    signs: &Signal,
    config: &GolfingConfig,
    rng: &mut Rng,
) -> Result<(MeasurementMatrix, DualCertificate)> {
    let n = spec.n();
    check_dims(n, support.len())?;
    if support.ambient_dim() != n || signs.len() != n {
        return Err(Error::DimensionMismatch("support and signs must live in dimension n".into()));
    }
    config.validate()?;
    let complex = spec.field() == Field::Complex;
    let mut raw_batches = Vec::new();
    let mut batches = Vec::new();
    let mut start = 0;
    let run = golf(n, support, signs, config, |stage| {
        let m_i = config.batch_sizes[stage];
        let raw = sample_raw_rows(spec, m_i, rng);
        let rows = if complex {
            DMatrix::from_fn(2 * m_i, n, |r, j| if r % 2 == 0 { raw[(r / 2, j)].re } else { raw[(r / 2, j)].im })
        } else {
            raw.map(|c| c.re)
        };
        raw_batches.push(rows.clone());
        batches.push((start, start + m_i));
        start += m_i;
        Ok(Some(Batch { rows, weight: 1.0 / m_i as f64, samples: m_i }))
    })?;

    let m_total: usize = batches.last().map_or(0, |b| b.1);
    let row_count: usize = raw_batches.iter().map(|b| b.nrows()).sum();
    let scale = 1.0 / (m_total as f64).sqrt();
    let mut stacked = DMatrix::zeros(row_count, n);
    let mut r0 = 0;
    for b in &raw_batches {
        stacked.rows_mut(r0, b.nrows()).copy_from(&(b * scale));
        r0 += b.nrows();
    }
    let batches = if complex { batches.iter().map(|&(a, b)| (2 * a, 2 * b)).collect() } else { batches };
    let label = if complex { format!("realify({})", spec.to_json()) } else { spec.to_json().to_string() };
    let a = MeasurementMatrix::new(
        Entries::Real(stacked),
        scale,
        Some(Provenance { ensemble: label, seed: spec.seed(), batches }),
    )?;
    let w: Vec<f64> = run.w.iter().flat_map(|b| b.iter().map(|x| x / scale)).collect();
    let cert = DualCertificate {
        v: run.v,
        w: DVector::from_vec(w),
        q_norms: run.q_norms,
        batch_log: run.log,
        support: support.indices().to_vec(),
        success: run.success,
    };
    Ok((a, cert))
}

/// Runs the golfing scheme over the row batches recorded in `a`'s
/// provenance, in order. Batch `i` is weighted by `m/m_i` with `m` the number
/// of rows of `a`; `config.batch_sizes` is ignored.
pub fn golfing_on_matrix(
    a: &MeasurementMatrix,
    support: &SupportSet,
    signs: &Signal,
    config: &GolfingConfig,
) -> Result<DualCertificate> {
    let am = a.as_real()?;
    let (m, n) = am.shape();
    check_dims(n, support.len())?;
    if support.ambient_dim() != n || signs.len() != n {
        return Err(Error::DimensionMismatch("support and signs must live in dimension n".into()));
    }
    config.validate()?;
    let ranges = a
        .provenance()
        .map(|p| p.batches.clone())
        .filter(|b| !b.is_empty())
        .ok_or_else(|| Error::Precondition("matrix carries no row-batch partition".into()))?;
    if ranges.iter().any(|&(lo, hi)| lo >= hi || hi > m) {
        return Err(Error::InvalidConfig("batch ranges must be nonempty and within the matrix".into()));
    }
    let mut it = ranges.iter();
    let run = golf(n, support, signs, config, |_| {
        Ok(it.next().map(|&(lo, hi)| Batch {
            rows: am.rows(lo, hi - lo).into_owned(),
            weight: m as f64 / (hi - lo) as f64,
            samples: hi - lo,
        }))
    })?;
    // rows of batches never visited carry zero weight
    let mut w = vec![0.0; m];
    for (&(lo, _), wb) in ranges.iter().zip(&run.w) {
        w[lo..lo + wb.len()].copy_from_slice(wb.as_slice());
    }
    Ok(DualCertificate {
        v: run.v,
        w: DVector::from_vec(w),
        q_norms: run.q_norms,
        batch_log: run.log,
        support: support.indices().to_vec(),
        success: run.success,
    })
}
