//! Row distributions `F` for the sensing vectors and the matrices built from
//! them.
//!
//! A raw row `a ~ F` is returned as a complex vector; real families have zero
//! imaginary parts. [`build_matrix`] stores row `k` as `a_k* / √m` and tags
//! the result real whenever the family is real.

mod coherence;

pub use coherence::{
    conditional_second_moment, deterministic_coherence, gaussian_tail, isotropy_check,
    near_isotropy_deviation, stochastic_coherence, CoherenceMode, CoherenceReport,
    StochasticConditions, TailModel,
};

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{Entries, Field, MeasurementMatrix, Provenance, C64};
use crate::rng::Rng;

/// Sensing-vector family.
#[derive(Clone)]
pub enum Family {
    /// iid N(0, 1) entries.
    Gaussian,
    /// iid symmetric ±1 entries.
    Binary,
    /// Uniformly chosen row of an orthogonal `U` with `U*U = nI`.
    SubsampledOrthogonal { u: Arc<DMatrix<C64>> },
    /// `a[t] = exp(i2πkt/n)`, `k` uniform.
    SubsampledDft,
    /// Uniformly chosen row of the circulant matrix of a flat-spectrum
    /// filter `g`, normalized so that `|ĝ_k|² = n`.
    RandomConvolution { g: Arc<Vec<f64>>, spectrum: Arc<Vec<C64>>, ifft: Arc<dyn Fft<f64>> },
    /// `a = √n e_i`, `i` uniform.
    CoordinateSampling,
    /// `a[t] = exp(i2πωt)`, `ω` uniform in `[0, 1]`.
    ContinuousFourier,
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Binary => "binary",
            Family::SubsampledOrthogonal { .. } => "subsampled_orthogonal",
            Family::SubsampledDft => "subsampled_dft",
            Family::RandomConvolution { .. } => "random_convolution",
            Family::CoordinateSampling => "coordinate_sampling",
            Family::ContinuousFourier => "continuous_fourier",
        }
    }

    pub fn field(&self) -> Field {
        match self {
            Family::SubsampledDft | Family::ContinuousFourier => Field::Complex,
            Family::SubsampledOrthogonal { u } => {
                if u.iter().all(|v| v.im == 0.0) {
                    Field::Real
                } else {
                    Field::Complex
                }
            }
            _ => Field::Real,
        }
    }
}

/// A row distribution over `ℝⁿ` or `ℂⁿ` plus the seed experiments draw from.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    family: Family,
    n: usize,
    seed: u64,
    params: Value,
}

#[derive(Serialize, Deserialize)]
struct EnsembleJson {
    family: String,
    n: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "empty_params")]
    params: Value,
}

fn empty_params() -> Value {
    json!({})
}

impl EnsembleSpec {
    fn simple(family: Family, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("ensemble dimension n must be >= 1".into()));
        }
        Ok(EnsembleSpec { family, n, seed, params: empty_params() })
    }

    pub fn gaussian(n: usize, seed: u64) -> Result<Self> {
        Self::simple(Family::Gaussian, n, seed)
    }

    pub fn binary(n: usize, seed: u64) -> Result<Self> {
        Self::simple(Family::Binary, n, seed)
    }

    pub fn subsampled_dft(n: usize, seed: u64) -> Result<Self> {
        Self::simple(Family::SubsampledDft, n, seed)
    }

    pub fn coordinate_sampling(n: usize, seed: u64) -> Result<Self> {
        Self::simple(Family::CoordinateSampling, n, seed)
    }

    pub fn continuous_fourier(n: usize, seed: u64) -> Result<Self> {
        Self::simple(Family::ContinuousFourier, n, seed)
    }

    /// Rows of `u`, which must satisfy `‖U*U − nI‖ ≤ 1e-8·n`.
    pub fn subsampled_orthogonal(u: DMatrix<C64>, seed: u64) -> Result<Self> {
        let n = u.nrows();
        if n == 0 || u.ncols() != n {
            return Err(Error::InvalidArgument("orthogonal transform must be square and nonempty".into()));
        }
        let gram = u.ad_mul(&u) - DMatrix::<C64>::identity(n, n) * C64::new(n as f64, 0.0);
        let dev = crate::linalg::operator_norm(&gram);
        if dev > 1e-8 * n as f64 {
            return Err(Error::InvalidArgument(format!("U*U deviates from nI by {dev:.3e}")));
        }
        let params = if u.iter().all(|v| v.im == 0.0) {
            json!({ "u": rows_json(&u.map(|v| v.re)) })
        } else {
            json!({ "u_re": rows_json(&u.map(|v| v.re)), "u_im": rows_json(&u.map(|v| v.im)) })
        };
        Ok(EnsembleSpec { family: Family::SubsampledOrthogonal { u: Arc::new(u) }, n, seed, params })
    }

    /// Sylvester–Hadamard transform; `n` must be a power of two.
    pub fn hadamard(n: usize, seed: u64) -> Result<Self> {
        let h = hadamard_matrix(n)?;
        let mut spec = Self::subsampled_orthogonal(h.map(|v| C64::new(v, 0.0)), seed)?;
        spec.params = json!({ "transform": "hadamard" });
        Ok(spec)
    }

    /// Circulant rows of `g`. All Fourier components of `g` must have equal
    /// magnitude (1e-8 relative); `g` is rescaled so that `|ĝ_k|² = n`.
    pub fn random_convolution(g: Vec<f64>, seed: u64) -> Result<Self> {
        let n = g.len();
        if n == 0 {
            return Err(Error::InvalidArgument("filter must be nonempty".into()));
        }
        let mut planner = FftPlanner::new();
        let mut spec: Vec<C64> = g.iter().map(|&v| C64::new(v, 0.0)).collect();
        planner.plan_fft_forward(n).process(&mut spec);
        let mags: Vec<f64> = spec.iter().map(|c| c.norm()).collect();
        let max = mags.iter().copied().fold(0.0, f64::max);
        let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
        if max == 0.0 || (max - min) > 1e-8 * max {
            return Err(Error::InvalidArgument(format!(
                "filter spectrum is not flat: |ĝ| in [{min:.6e}, {max:.6e}]"
            )));
        }
        let scale = (n as f64).sqrt() / max;
        let g: Vec<f64> = g.iter().map(|v| v * scale).collect();
        let spectrum: Vec<C64> = spec.iter().map(|c| c * scale).collect();
        let params = json!({ "g": g });
        Ok(EnsembleSpec {
            family: Family::RandomConvolution {
                g: Arc::new(g),
                spectrum: Arc::new(spectrum),
                ifft: planner.plan_fft_inverse(n),
            },
            n,
            seed,
            params,
        })
    }

    /// Random convolution with a real filter whose Fourier phases are drawn
    /// uniformly (Hermitian-symmetric) from `filter_seed`.
    pub fn random_convolution_from_seed(n: usize, filter_seed: u64, seed: u64) -> Result<Self> {
        let g = random_flat_filter(n, filter_seed)?;
        let mut spec = Self::random_convolution(g, seed)?;
        spec.params = json!({ "filter_seed": filter_seed });
        Ok(spec)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn field(&self) -> Field {
        self.family.field()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn to_json(&self) -> Value {
        json!({
            "family": self.family.name(),
            "n": self.n,
            "seed": self.seed,
            "params": self.params,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let raw: EnsembleJson = serde_json::from_value(v.clone())?;
        let (n, seed, p) = (raw.n, raw.seed, &raw.params);
        match raw.family.as_str() {
            "gaussian" => Self::gaussian(n, seed),
            "binary" => Self::binary(n, seed),
            "subsampled_dft" => Self::subsampled_dft(n, seed),
            "coordinate_sampling" => Self::coordinate_sampling(n, seed),
            "continuous_fourier" => Self::continuous_fourier(n, seed),
            "subsampled_orthogonal" => {
                if let Some(t) = p.get("transform").and_then(Value::as_str) {
                    return match t {
                        "hadamard" => Self::hadamard(n, seed),
                        "dft" => Self::subsampled_orthogonal(dft_matrix(n), seed),
                        other => Err(Error::Parse(format!("unknown transform {other:?}"))),
                    };
                }
                let re = p
                    .get("u")
                    .or_else(|| p.get("u_re"))
                    .ok_or_else(|| Error::Parse("subsampled_orthogonal needs params.transform or params.u".into()))?;
                let re = parse_rows(re, n)?;
                let im = match p.get("u_im") {
                    Some(v) => parse_rows(v, n)?,
                    None => DMatrix::zeros(n, n),
                };
                Self::subsampled_orthogonal(DMatrix::from_fn(n, n, |i, j| C64::new(re[(i, j)], im[(i, j)])), seed)
            }
            "random_convolution" => {
                if let Some(fs) = p.get("filter_seed").and_then(Value::as_u64) {
                    return Self::random_convolution_from_seed(n, fs, seed);
                }
                let g: Vec<f64> = serde_json::from_value(
                    p.get("g").cloned().ok_or_else(|| Error::Parse("random_convolution needs params.g or params.filter_seed".into()))?,
                )?;
                if g.len() != n {
                    return Err(Error::Parse(format!("filter length {} != n = {n}", g.len())));
                }
                Self::random_convolution(g, seed)
            }
            other => Err(Error::Parse(format!("unknown ensemble family {other:?}"))),
        }
    }

    /// Accepts inline JSON or a path to a JSON file.
    pub fn from_arg(arg: &str) -> Result<Self> {
        let text = if arg.trim_start().starts_with('{') {
            arg.to_string()
        } else {
            std::fs::read_to_string(Path::new(arg))?
        };
        Self::from_json(&serde_json::from_str(&text)?)
    }
}

fn rows_json(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| json!(m.row(i).iter().copied().collect::<Vec<f64>>())).collect())
}

fn parse_rows(v: &Value, n: usize) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone())?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("matrix parameter must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Sylvester construction of the `n × n` Hadamard matrix.
pub fn hadamard_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("Hadamard size {n} is not a power of two")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 }))
}

/// Unnormalized DFT matrix `U[k, t] = exp(−i2πkt/n)`, so `U*U = nI`.
pub fn dft_matrix(n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |k, t| {
        let ang = -2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
        C64::new(ang.cos(), ang.sin())
    })
}

/// A real filter of length `n` with `|ĝ_k| = 1` and uniformly random
/// Hermitian-symmetric phases.
pub fn random_flat_filter(n: usize, filter_seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("filter length must be >= 1".into()));
    }
    let mut rng = crate::rng::stream(filter_seed, &[0x6669_6c74]);
    let mut spec = vec![C64::new(0.0, 0.0); n];
    for k in 0..=n / 2 {
        let mirror = (n - k) % n;
        if k == mirror {
            spec[k] = C64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0);
        } else {
            let phase = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            spec[k] = C64::from_polar(1.0, phase);
            spec[mirror] = spec[k].conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    Ok(spec.iter().map(|c| c.re / n as f64).collect())
}

/// One raw (un-normalized) sensing vector `a ~ F`.
pub fn sample_row(spec: &EnsembleSpec, rng: &mut Rng) -> DVector<C64> {
    let n = spec.n;
    match &spec.family {
        Family::Gaussian => DVector::from_fn(n, |_, _| C64::new(StandardNormal.sample(rng), 0.0)),
        Family::Binary => DVector::from_fn(n, |_, _| C64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0)),
        Family::SubsampledOrthogonal { u } => {
            let k = rng.random_range(0..n);
            u.row(k).transpose().map(|v| v.conj())
        }
        Family::SubsampledDft => {
            let k = rng.random_range(0..n);
            DVector::from_fn(n, |t, _| {
                let ang = 2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
                C64::new(ang.cos(), ang.sin())
            })
        }
        Family::RandomConvolution { spectrum, ifft, .. } => {
            // shift by t in time = phase ramp in frequency
            let t = rng.random_range(0..n);
            let mut buf: Vec<C64> = spectrum
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let ang = -2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
                    c * C64::from_polar(1.0, ang)
                })
                .collect();
            ifft.process(&mut buf);
            DVector::from_fn(n, |j, _| C64::new(buf[j].re / n as f64, 0.0))
        }
        Family::CoordinateSampling => {
            let i = rng.random_range(0..n);
            let mut a = DVector::from_element(n, C64::new(0.0, 0.0));
            a[i] = C64::new((n as f64).sqrt(), 0.0);
            a
        }
        Family::ContinuousFourier => {
            let omega: f64 = rng.random();
            DVector::from_fn(n, |t, _| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * omega * t as f64))
        }
    }
}

/// Draws `rows` raw vectors and returns them as the rows of a matrix
/// storing `a_k*` (no normalization).
pub fn sample_raw_rows(spec: &EnsembleSpec, rows: usize, rng: &mut Rng) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(rows, spec.n, C64::new(0.0, 0.0));
    for k in 0..rows {
        let a = sample_row(spec, rng);
        for t in 0..spec.n {
            out[(k, t)] = a[t].conj();
        }
    }
    out
}

/// Normalizes raw rows `a_k*` by `1/√m_scale` into a matrix of the family's field.
pub(crate) fn normalize_rows(
    spec: &EnsembleSpec,
    raw: DMatrix<C64>,
    m_scale: usize,
    batches: Vec<(usize, usize)>,
) -> Result<MeasurementMatrix> {
    let scaling = 1.0 / (m_scale as f64).sqrt();
    let entries = match spec.field() {
        Field::Real => Entries::Real(raw.map(|v| v.re * scaling)),
        Field::Complex => Entries::Complex(raw.map(|v| v * scaling)),
    };
    MeasurementMatrix::new(
        entries,
        scaling,
        Some(Provenance { ensemble: spec.to_json().to_string(), seed: spec.seed, batches }),
    )
}

/// `m` iid rows scaled by `1/√m`.
pub fn build_matrix(spec: &EnsembleSpec, m: usize, rng: &mut Rng) -> Result<MeasurementMatrix> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    let raw = sample_raw_rows(spec, m, rng);
    normalize_rows(spec, raw, m, Vec::new())
}
