use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Signal;
use crate::rng::Rng;

/// Generator for the planted signal `x`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "amplitudes", rename_all = "lowercase", deny_unknown_fields)]
pub enum SignalModel {
    /// Uniform random support of size `s`, iid ±1 amplitudes.
    #[default]
    Sign,
    /// Uniform random support of size `s`, iid N(0,1) amplitudes.
    Gaussian,
    /// Dense profile: the k-th largest magnitude is `k^{-decay}`, placed on a
    /// uniform random permutation with random signs. `s` is ignored.
    Compressible { decay: f64 },
}

impl SignalModel {
    pub fn label(&self) -> String {
        match self {
            SignalModel::Sign => "sign".into(),
            SignalModel::Gaussian => "gaussian".into(),
            SignalModel::Compressible { decay } => format!("compressible(p={decay})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SignalModel::Compressible { decay } if !(decay.is_finite() && *decay > 0.0) => {
                Err(Error::InvalidConfig("compressible decay must be finite and > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Draws `x ∈ ℝⁿ`; support indices are drawn before amplitudes.
    pub fn plant(&self, n: usize, s: usize, rng: &mut Rng) -> Result<Signal> {
        if s > n {
            return Err(Error::InvalidArgument(format!("s = {s} exceeds n = {n}")));
        }
        let mut x = vec![0.0; n];
        match self {
            SignalModel::Sign | SignalModel::Gaussian => {
                let mut support = index::sample(rng, n, s).into_vec();
                support.sort_unstable();
                for i in support {
                    x[i] = if *self == SignalModel::Sign {
                        if rng.random::<bool>() { 1.0 } else { -1.0 }
                    } else {
                        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
                    };
                }
            }
            SignalModel::Compressible { decay } => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(rng);
                for (k, &i) in order.iter().enumerate() {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    x[i] = sign * ((k + 1) as f64).powf(-decay);
                }
            }
        }
        Signal::from_slice(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn sign_model_has_s_unit_entries() {
        let x = SignalModel::Sign.plant(50, 7, &mut stream(3, &[])).unwrap();
        assert_eq!(x.support().len(), 7);
        assert!(x.as_slice().iter().all(|&v| v == 0.0 || v.abs() == 1.0));
        assert_eq!(SignalModel::Sign.plant(5, 0, &mut stream(3, &[])).unwrap().l1_norm(), 0.0);
    }

    #[test]
    fn compressible_profile() {
        let x = SignalModel::Compressible { decay: 1.0 }.plant(10, 3, &mut stream(0, &[])).unwrap();
        let mut mags: Vec<f64> = x.as_slice().iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        for (k, v) in mags.iter().enumerate() {
            assert!((v - 1.0 / (k + 1) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn config_round_trip() {
        let m: SignalModel = serde_json::from_str(r#"{"amplitudes": "compressible", "decay": 1.5}"#).unwrap();
        assert_eq!(m, SignalModel::Compressible { decay: 1.5 });
        let g: SignalModel = serde_json::from_str(r#"{"amplitudes": "gaussian"}"#).unwrap();
        assert_eq!(g, SignalModel::Gaussian);
        assert!(SignalModel::Compressible { decay: -1.0 }.validate().is_err());
    }
}
