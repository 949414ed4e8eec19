use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::signals::SignalModel;
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};
use crate::estimates::Estimate;
use crate::solvers::{Program, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseTransition,
    ErrorScaling,
    CertificateRate,
    EstimateSweep,
    EnsembleCompare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PhaseTransition => "phase_transition",
            ExperimentKind::ErrorScaling => "error_scaling",
            ExperimentKind::CertificateRate => "certificate_rate",
            ExperimentKind::EstimateSweep => "estimate_sweep",
            ExperimentKind::EnsembleCompare => "ensemble_compare",
        }
    }
}

/// Cartesian grid of cell parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: Vec<usize>,
    pub s: Vec<usize>,
    pub m: Vec<usize>,
    #[serde(default = "zero_sigma")]
    pub sigma: Vec<f64>,
}

fn zero_sigma() -> Vec<f64> {
    vec![0.0]
}

/// Events an estimate sweep can count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepEvent {
    E1,
    E2,
    E3,
    E4,
    Weakrip,
    Noise,
}

impl SweepEvent {
    pub fn estimate(self) -> Option<Estimate> {
        match self {
            SweepEvent::E1 => Some(Estimate::E1),
            SweepEvent::E2 => Some(Estimate::E2),
            SweepEvent::E3 => Some(Estimate::E3),
            SweepEvent::E4 => Some(Estimate::E4),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepEvent::E1 => "e1",
            SweepEvent::E2 => "e2",
            SweepEvent::E3 => "e3",
            SweepEvent::E4 => "e4",
            SweepEvent::Weakrip => "weakrip",
            SweepEvent::Noise => "noise",
        }
    }
}

impl std::str::FromStr for SweepEvent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_ascii_lowercase()))
            .map_err(|_| Error::Parse(format!("unknown event {s:?}; expected e1|e2|e3|e4|weakrip|noise")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub which: Vec<SweepEvent>,
    /// Deviation level `t` of the estimate events.
    pub level: f64,
    /// Coherence override; otherwise the family's deterministic coherence,
    /// or the stochastic one for Gaussian rows.
    pub mu: Option<f64>,
    /// Size of the extra set `R` for the weak-RIP event.
    pub rip_r: usize,
    pub rip_delta: f64,
    /// Sampled candidate sets per weak-RIP trial.
    pub rip_budget: usize,
    /// Project out `range(A_T)` in the noise event.
    pub with_projection: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            which: vec![SweepEvent::E1],
            level: 0.5,
            mu: None,
            rip_r: 1,
            rip_delta: 0.5,
            rip_budget: 2000,
            with_projection: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateOptions {
    /// Overrides `3⌈ln n⌉ + 1`.
    pub max_extra_batches: Option<usize>,
}

/// A full experiment description, loaded from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Value>,
    /// Extra ensembles; cells range over `ensemble` followed by these.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ensembles: Vec<Value>,
    pub grid: Grid,
    pub trials: usize,
    pub seed: u64,
    /// Output directory. Not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default = "default_program")]
    pub program: Program,
    /// Programs solved on the same instances as `program` (error scaling).
    #[serde(default)]
    pub compare: Vec<Program>,
    #[serde(default)]
    pub signal: SignalModel,
    /// `λ`; `10√log n` when absent.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub estimate: SweepOptions,
    #[serde(default)]
    pub golfing: CertificateOptions,
}

fn default_program() -> Program {
    Program::Bp
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(1.0)
    }

    pub fn ensemble_specs(&self) -> Result<Vec<EnsembleSpec>> {
        self.ensemble
            .iter()
            .chain(&self.ensembles)
            .map(|v| EnsembleSpec::from_json(v).map_err(|e| Error::InvalidConfig(format!("ensemble: {e}"))))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let g = &self.grid;
        if g.n.is_empty() || g.s.is_empty() || g.m.is_empty() || g.sigma.is_empty() {
            return bad("grid lists n, s, m and sigma must be nonempty".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.ensemble.is_none() && self.ensembles.is_empty() {
            return bad("at least one ensemble is required".into());
        }
        self.ensemble_specs()?;
        for &n in &g.n {
            if let Some(&s) = g.s.iter().find(|&&s| s > n) {
                return bad(format!("s = {s} exceeds n = {n}"));
            }
        }
        if g.n.contains(&0) || g.m.contains(&0) {
            return bad("n and m must be >= 1".into());
        }
        if g.sigma.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return bad("sigma must be finite and >= 0".into());
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return bad("lambda must be finite and >= 0".into());
            }
        }
        if let Some(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return bad("beta must be finite and > 0".into());
            }
        }
        self.signal.validate()?;
        match self.kind {
            ExperimentKind::PhaseTransition | ExperimentKind::EnsembleCompare => {
                if g.sigma.iter().any(|&s| s != 0.0) {
                    return bad(format!("{} requires sigma = 0", self.kind.name()));
                }
            }
            ExperimentKind::ErrorScaling => {
                if g.sigma.iter().any(|&s| s <= 0.0) {
                    return bad("error_scaling requires sigma > 0".into());
                }
                if self.program == Program::Bp || self.compare.contains(&Program::Bp) {
                    return bad("error_scaling solves lasso or dantzig".into());
                }
            }
            ExperimentKind::CertificateRate => {
                if g.s.contains(&0) {
                    return bad("certificate_rate needs s >= 1".into());
                }
            }
            ExperimentKind::EstimateSweep => {
                if self.estimate.which.is_empty() {
                    return bad("estimate.which must be nonempty".into());
                }
                if g.s.contains(&0) {
                    return bad("estimate_sweep needs s >= 1".into());
                }
                if !(self.estimate.level > 0.0 && self.estimate.level.is_finite()) {
                    return bad("estimate.level must be finite and > 0".into());
                }
            }
        }
        Ok(())
    }

    /// Canonical form: ensembles normalized, keys sorted, output dropped.
    pub fn canonical_json(&self) -> Result<String> {
        let mut cfg = self.clone();
        cfg.output = None;
        let specs = cfg.ensemble_specs()?;
        cfg.ensemble = None;
        cfg.ensembles = specs.iter().map(EnsembleSpec::to_json).collect();
        // serde_json maps are ordered by key, so this string is canonical
        let v = serde_json::to_value(&cfg)?;
        Ok(serde_json::to_string(&v)?)
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical_json()?.as_bytes())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"kind": "phase_transition", "ensemble": {"family": "gaussian", "n": 32},
        "grid": {"n": [32], "s": [2], "m": [16]}, "trials": 3, "seed": 1}"#;

    #[test]
    fn hash_ignores_field_order_and_output() {
        let a = ExperimentConfig::from_json_str(BASE).unwrap();
        let b = ExperimentConfig::from_json_str(
            r#"{"seed": 1, "trials": 3, "grid": {"m": [16], "s": [2], "n": [32]},
                "ensemble": {"n": 32, "family": "gaussian", "seed": 0}, "kind": "phase_transition", "output": "x"}"#,
        )
        .unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let mut c = a.clone();
        c.seed = 2;
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        let mut d = a.clone();
        d.grid.m = vec![17];
        assert_ne!(a.hash().unwrap(), d.hash().unwrap());
    }

    #[test]
    fn invalid_configs() {
        let empty = BASE.replace(r#""m": [16]"#, r#""m": []"#);
        assert!(matches!(ExperimentConfig::from_json_str(&empty), Err(Error::InvalidConfig(_))));
        let zero = BASE.replace(r#""trials": 3"#, r#""trials": 0"#);
        assert!(matches!(ExperimentConfig::from_json_str(&zero), Err(Error::InvalidConfig(_))));
        let big_s = BASE.replace(r#""s": [2]"#, r#""s": [40]"#);
        assert!(matches!(ExperimentConfig::from_json_str(&big_s), Err(Error::InvalidConfig(_))));
        let noisy = BASE.replace(r#""m": [16]"#, r#""m": [16], "sigma": [0.1]"#);
        assert!(matches!(ExperimentConfig::from_json_str(&noisy), Err(Error::InvalidConfig(_))));
        let typo = BASE.replace(r#""trials""#, r#""trails""#);
        assert!(ExperimentConfig::from_json_str(&typo).is_err());
    }

    #[test]
    fn sweep_event_parsing() {
        assert_eq!("E3".parse::<SweepEvent>().unwrap(), SweepEvent::E3);
        assert_eq!("weakrip".parse::<SweepEvent>().unwrap(), SweepEvent::Weakrip);
        assert!("e5".parse::<SweepEvent>().is_err());
    }
}
