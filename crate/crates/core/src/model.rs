//! Signals, supports, measurement matrices and the elementary operations on
//! them that every other module builds on.
//!
//! Indices are 0-based in storage. Matrices carry a scalar-field tag; the
//! recovery programs only accept real matrices, so complex ensembles go
//! through [`realify`] first.

use nalgebra::{ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use nalgebra::Complex;
pub type C64 = Complex<f64>;

/// Scalar field of a matrix or measurement vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

/// A real signal `x ∈ ℝⁿ` with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(DVector<f64>);

impl Signal {
    pub fn new(entries: DVector<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("signal dimension must be >= 1".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal".into()));
        }
        Ok(Signal(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(entries))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Indices of nonzero entries.
    pub fn support(&self) -> SupportSet {
        SupportSet {
            indices: (0..self.len()).filter(|&i| self.0[i] != 0.0).collect(),
            n: self.len(),
        }
    }
}

/// An ordered set of column indices in `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    n: usize,
}

impl SupportSet {
    /// Builds a support from indices; they are sorted, and duplicates or
    /// out-of-range indices are rejected.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate support index".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::InvalidArgument(format!(
                    "support index {last} out of range for n = {n}"
                )));
            }
        }
        Ok(SupportSet { indices, n })
    }

    pub fn empty(n: usize) -> Self {
        SupportSet { indices: Vec::new(), n }
    }

    pub fn full(n: usize) -> Self {
        SupportSet { indices: (0..n).collect(), n }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> SupportSet {
        SupportSet {
            indices: (0..self.n).filter(|&i| !self.contains(i)).collect(),
            n: self.n,
        }
    }

    pub fn union(&self, other: &SupportSet) -> Result<SupportSet> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch("support ambient dimensions differ".into()));
        }
        let mut idx: Vec<usize> = self.indices.iter().chain(&other.indices).copied().collect();
        idx.sort_unstable();
        idx.dedup();
        Ok(SupportSet { indices: idx, n: self.n })
    }
}

/// Entries of a matrix, tagged by field.
#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

impl Entries {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Entries::Real(a) => a.shape(),
            Entries::Complex(a) => a.shape(),
        }
    }

    pub fn field(&self) -> Field {
        match self {
            Entries::Real(_) => Field::Real,
            Entries::Complex(_) => Field::Complex,
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            Entries::Real(a) => a.iter().all(|v| v.is_finite()),
            Entries::Complex(a) => a.iter().all(|v| v.re.is_finite() && v.im.is_finite()),
        }
    }
}

/// Where a matrix came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub ensemble: String,
    pub seed: u64,
    /// Row boundaries of independently drawn batches, as half-open ranges.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub batches: Vec<(usize, usize)>,
}

/// The `m × n` normalized sensing matrix: row `k` is `a_k* / √m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    entries: Entries,
    scaling: f64,
    provenance: Option<Provenance>,
}

impl MeasurementMatrix {
    /// Wraps already-normalized entries. `scaling` is the factor that was
    /// applied to the raw rows (`1/√m` for ensemble draws, 1 for matrices
    /// supplied directly).
    pub fn new(entries: Entries, scaling: f64, provenance: Option<Provenance>) -> Result<Self> {
        let (m, n) = entries.shape();
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument(format!("matrix must be at least 1x1, got {m}x{n}")));
        }
        if !entries.all_finite() {
            return Err(Error::NonFinite("measurement matrix".into()));
        }
        if !(scaling.is_finite() && scaling > 0.0) {
            return Err(Error::InvalidArgument("scaling must be positive".into()));
        }
        Ok(MeasurementMatrix { entries, scaling, provenance })
    }

    pub fn from_real(a: DMatrix<f64>) -> Result<Self> {
        Self::new(Entries::Real(a), 1.0, None)
    }

    pub fn from_complex(a: DMatrix<C64>) -> Result<Self> {
        Self::new(Entries::Complex(a), 1.0, None)
    }

    pub fn nrows(&self) -> usize {
        self.entries.shape().0
    }

    pub fn ncols(&self) -> usize {
        self.entries.shape().1
    }

    pub fn field(&self) -> Field {
        self.entries.field()
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn scaling(&self) -> f64 {
        self.scaling
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// The real entries, or an error for complex matrices.
    pub fn as_real(&self) -> Result<&DMatrix<f64>> {
        match &self.entries {
            Entries::Real(a) => Ok(a),
            Entries::Complex(_) => Err(Error::InvalidArgument(
                "complex matrix where a real one is required; realify it first".into(),
            )),
        }
    }

    pub fn to_complex(&self) -> DMatrix<C64> {
        match &self.entries {
            Entries::Real(a) => a.map(|v| C64::new(v, 0.0)),
            Entries::Complex(a) => a.clone(),
        }
    }

    /// Raw sensing vector `a_k` (row `k` conjugated and un-scaled).
    pub fn raw_row(&self, k: usize) -> DVector<C64> {
        let inv = 1.0 / self.scaling;
        match &self.entries {
            Entries::Real(a) => a.row(k).transpose().map(|v| C64::new(v * inv, 0.0)),
            Entries::Complex(a) => a.row(k).transpose().map(|v| v.conj() * inv),
        }
    }

    pub fn apply(&self, x: &Signal) -> Result<MeasurementVector> {
        if x.len() != self.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "signal length {} vs {} columns",
                x.len(),
                self.ncols()
            )));
        }
        let entries = match &self.entries {
            Entries::Real(a) => VectorEntries::Real(a * x.as_vector()),
            Entries::Complex(a) => VectorEntries::Complex(a * x.as_vector().map(|v| C64::new(v, 0.0))),
        };
        MeasurementVector::new(entries, 0.0)
    }
}

/// Entries of a measurement vector, tagged by field.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorEntries {
    Real(DVector<f64>),
    Complex(DVector<C64>),
}

impl VectorEntries {
    pub fn len(&self) -> usize {
        match self {
            VectorEntries::Real(v) => v.len(),
            VectorEntries::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Measurements `y = Ax + σ_m z` together with the noise scale `σ_m = σ/√m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    entries: VectorEntries,
    sigma_m: f64,
}

impl MeasurementVector {
    pub fn new(entries: VectorEntries, sigma_m: f64) -> Result<Self> {
        let finite = match &entries {
            VectorEntries::Real(v) => v.iter().all(|x| x.is_finite()),
            VectorEntries::Complex(v) => v.iter().all(|x| x.re.is_finite() && x.im.is_finite()),
        };
        if !finite {
            return Err(Error::NonFinite("measurement vector".into()));
        }
        if !(sigma_m.is_finite() && sigma_m >= 0.0) {
            return Err(Error::InvalidArgument("sigma_m must be finite and >= 0".into()));
        }
        Ok(MeasurementVector { entries, sigma_m })
    }

    pub fn real(v: DVector<f64>, sigma_m: f64) -> Result<Self> {
        Self::new(VectorEntries::Real(v), sigma_m)
    }

    pub fn entries(&self) -> &VectorEntries {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sigma_m(&self) -> f64 {
        self.sigma_m
    }

    pub fn with_sigma_m(mut self, sigma_m: f64) -> Result<Self> {
        if !(sigma_m.is_finite() && sigma_m >= 0.0) {
            return Err(Error::InvalidArgument("sigma_m must be finite and >= 0".into()));
        }
        self.sigma_m = sigma_m;
        Ok(self)
    }

    pub fn as_real(&self) -> Result<&DVector<f64>> {
        match &self.entries {
            VectorEntries::Real(v) => Ok(v),
            VectorEntries::Complex(_) => Err(Error::InvalidArgument(
                "complex measurements where real ones are required; realify first".into(),
            )),
        }
    }
}

/// Serializes a vector as a flat JSON array.
pub(crate) fn ser_vector<S: serde::Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

/// Keeps the `s` largest-magnitude entries of `x` and zeroes the rest.
/// Equal magnitudes are resolved in favour of the lower index.
pub fn best_s_approx(x: &Signal, s: usize) -> Result<Signal> {
    let n = x.len();
    if s > n {
        return Err(Error::InvalidArgument(format!("s = {s} exceeds n = {n}")));
    }
    let v = x.as_vector();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps lower indices first among ties
    order.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()));
    let mut out = DVector::zeros(n);
    for &i in &order[..s] {
        out[i] = v[i];
    }
    Signal::new(out)
}

/// Componentwise sign with `sgn(0) = 0`.
pub fn sgn(x: &Signal) -> Signal {
    Signal(x.as_vector().map(sign))
}

pub(crate) fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Columns of `a` selected by `t`, in `t`'s order.
pub fn restrict(a: &MeasurementMatrix, t: &SupportSet) -> Result<Entries> {
    if t.ambient_dim() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "support over n = {} applied to {} columns",
            t.ambient_dim(),
            a.ncols()
        )));
    }
    Ok(match a.entries() {
        Entries::Real(m) => Entries::Real(m.select_columns(t.indices())),
        Entries::Complex(m) => Entries::Complex(m.select_columns(t.indices())),
    })
}

/// `‖A‖_{1,2}`: the largest column ℓ₂ norm.
pub fn max_column_norm(a: &MeasurementMatrix) -> f64 {
    match a.entries() {
        Entries::Real(m) => max_column_norm_of(m),
        Entries::Complex(m) => max_column_norm_of(m),
    }
}

pub(crate) fn max_column_norm_of<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Stacks real and imaginary parts: `A' = [Re A; Im A]`, `y' = [Re y; Im y]`.
///
/// For real `x`, `‖A'x‖₂ = ‖Ax‖₂` and `⟨A'x, y'⟩ = Re⟨Ax, y⟩`.
pub fn realify(
    a: &MeasurementMatrix,
    y: &MeasurementVector,
) -> Result<(MeasurementMatrix, MeasurementVector)> {
    if y.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements for {} rows",
            y.len(),
            a.nrows()
        )));
    }
    let (m, n) = (a.nrows(), a.ncols());
    let ac = a.to_complex();
    let yc = match y.entries() {
        VectorEntries::Real(v) => v.map(|t| C64::new(t, 0.0)),
        VectorEntries::Complex(v) => v.clone(),
    };
    let mut ar = DMatrix::zeros(2 * m, n);
    let mut yr = DVector::zeros(2 * m);
    for k in 0..m {
        for j in 0..n {
            ar[(k, j)] = ac[(k, j)].re;
            ar[(m + k, j)] = ac[(k, j)].im;
        }
        yr[k] = yc[k].re;
        yr[m + k] = yc[k].im;
    }
    let prov = a.provenance().map(|p| Provenance {
        ensemble: format!("realify({})", p.ensemble),
        seed: p.seed,
        batches: Vec::new(),
    });
    Ok((
        MeasurementMatrix::new(Entries::Real(ar), a.scaling(), prov)?,
        MeasurementVector::new(VectorEntries::Real(yr), y.sigma_m())?,
    ))
}
