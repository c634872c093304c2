//! Experiment configuration files.
//!
//! A config is TOML with three sections; unknown keys are rejected.
//!
//! ```toml
//! [system]
//! kind = "kicked_rotor"   # or "displaced_sho"
//! d = 100
//! epsilon = 3e-4
//! k = 0.2
//! n1 = 8192
//!
//! [state]
//! q = 0.5
//! p = 1.8
//!
//! [run]
//! method = "echo-2"
//! t_max = 100
//! n = 2048
//! ```
//!
//! Every optional key has a default, and [`ExperimentConfig::resolved`]
//! writes all of them back so the manifest of a run has no hidden values.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cf::CfAlgorithm;
use crate::dynamics::{SystemKind, SystemSpec, DEFAULT_SHO_DT};
use crate::error::{Error, Result};
use crate::phasespace::{Domain, GaussianWavepacket};
use crate::quantum::{discretize_gwp, MAX_N1};

pub const DEFAULT_K: f64 = 0.2;
pub const DEFAULT_N1: usize = 8192;
pub const DEFAULT_OMEGA: f64 = 1.0;
pub const DEFAULT_SHO_HBAR: f64 = 1.0;
pub const DEFAULT_N: usize = 1000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUTPUT: &str = "fidelity.csv";

/// Estimator selected by `run.method`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Dr,
    Qm,
    Cf(CfAlgorithm),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Dr => write!(f, "dr"),
            Method::Qm => write!(f, "qm"),
            Method::Cf(alg) => write!(f, "{alg}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dr" => Ok(Method::Dr),
            "qm" => Ok(Method::Qm),
            _ => s.parse().map(Method::Cf).map_err(|_| {
                Error::config(
                    "run.method",
                    format!("unknown method `{s}` (expected dr, qm, echo-M, fid-M, echo-N-M, fid-N-M or echo-1prime)"),
                )
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemName {
    KickedRotor,
    DisplacedSho,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kind: SystemName,
    pub d: usize,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

/// Packet center and width, shared by all dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub p: f64,
    /// Defaults to the coherent width `sqrt(ħ/2ω)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_q: Option<f64>,
    /// Oscillator only; the rotor fixes `ħ = 2π/n₁`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: String,
    /// Number of propagation steps.
    pub t_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Independent runs used for the `sigma` column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Report every this many steps (the last step is always reported).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub state: StateConfig,
    pub run: RunConfig,
}

fn parse_error(e: toml::de::Error) -> Error {
    let field = e
        .message()
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "config".to_string());
    Error::config(field, e.message().trim().to_string())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(parse_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn method(&self) -> Result<Method> {
        self.run.method.parse()
    }

    pub fn n(&self) -> usize {
        self.run.n.unwrap_or(DEFAULT_N)
    }

    pub fn s(&self) -> usize {
        self.run.s.unwrap_or(1)
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn output(&self) -> PathBuf {
        self.run.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
    }

    /// Steps at which values are reported, always including `0` and `t_max`.
    pub fn report_steps(&self) -> Vec<usize> {
        let every = self.run.report_every.unwrap_or(1).max(1);
        let mut steps: Vec<usize> = (0..=self.run.t_max).step_by(every).collect();
        if steps.last() != Some(&self.run.t_max) {
            steps.push(self.run.t_max);
        }
        steps
    }

    pub fn spec(&self) -> Result<SystemSpec> {
        let sys = &self.system;
        match sys.kind {
            SystemName::KickedRotor => {
                for (name, set) in [("system.omega", sys.omega.is_some()), ("system.dt", sys.dt.is_some())] {
                    if set {
                        return Err(Error::config(name, "not a kicked-rotor parameter"));
                    }
                }
                SystemSpec::kicked_rotor(
                    sys.d,
                    sys.k.unwrap_or(DEFAULT_K),
                    sys.epsilon,
                    sys.n1.unwrap_or(DEFAULT_N1),
                )
            }
            SystemName::DisplacedSho => {
                for (name, set) in [("system.k", sys.k.is_some()), ("system.n1", sys.n1.is_some())] {
                    if set {
                        return Err(Error::config(name, "not an oscillator parameter"));
                    }
                }
                let mut spec = SystemSpec::displaced_sho(sys.d, sys.epsilon, sys.dt.unwrap_or(DEFAULT_SHO_DT))?;
                if let SystemKind::DisplacedSho { omega, .. } = &mut spec.kind {
                    omega.fill(sys.omega.unwrap_or(DEFAULT_OMEGA));
                }
                spec.validate()?;
                Ok(spec)
            }
        }
    }

    pub fn state(&self) -> Result<GaussianWavepacket> {
        let st = &self.state;
        let d = self.system.d;
        if !(st.q.is_finite() && st.p.is_finite()) {
            return Err(Error::config("state", "packet center must be finite"));
        }
        let (hbar, domain, coherent) = match self.system.kind {
            SystemName::KickedRotor => {
                if st.hbar.is_some() {
                    return Err(Error::config("state.hbar", "the rotor fixes hbar = 2π/n1"));
                }
                let hbar = std::f64::consts::TAU / self.system.n1.unwrap_or(DEFAULT_N1) as f64;
                (hbar, Domain::Torus, (hbar / 2.0).sqrt())
            }
            SystemName::DisplacedSho => {
                let hbar = st.hbar.unwrap_or(DEFAULT_SHO_HBAR);
                let w = self.system.omega.unwrap_or(DEFAULT_OMEGA);
                (hbar, Domain::Plane, (hbar / (2.0 * w)).sqrt())
            }
        };
        GaussianWavepacket::new(
            vec![st.q; d],
            vec![st.p; d],
            vec![st.sigma_q.unwrap_or(coherent); d],
            hbar,
            domain,
        )
    }

    /// Checks every cross-field constraint without running anything.
    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        let state = self.state()?;
        spec.check_state(&state)?;
        if self.n() == 0 {
            return Err(Error::config("run.n", "must be at least 1"));
        }
        if self.s() == 0 {
            return Err(Error::config("run.s", "must be at least 1"));
        }
        if self.run.report_every == Some(0) {
            return Err(Error::config("run.report_every", "must be at least 1"));
        }
        match self.method()? {
            Method::Cf(alg) => alg.validate(&state, &spec),
            Method::Dr => Ok(()),
            Method::Qm => {
                if let SystemKind::KickedRotor { n1, .. } = spec.kind {
                    check_grid_memory(n1)?;
                    discretize_gwp(&crate::quantum::component(&state, 0), n1).map(|_| ())
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Copy with every default written out.
    pub fn resolved(&self) -> Result<Self> {
        let spec = self.spec()?;
        let state = self.state()?;
        let mut out = self.clone();
        match &spec.kind {
            SystemKind::KickedRotor { k, n1 } => {
                out.system.k = Some(*k);
                out.system.n1 = Some(*n1);
            }
            SystemKind::DisplacedSho { omega, dt } => {
                out.system.omega = Some(omega[0]);
                out.system.dt = Some(*dt);
                out.state.hbar = Some(state.hbar);
            }
        }
        out.state.sigma_q = Some(state.sigma_q[0]);
        out.run.method = self.method()?.to_string();
        out.run.n = Some(self.n());
        out.run.s = Some(self.s());
        out.run.seed = Some(self.seed());
        out.run.report_every = Some(self.run.report_every.unwrap_or(1));
        out.run.output = Some(self.output());
        Ok(out)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }
}

/// Rejects rotor grids whose propagation buffers would not fit in memory.
pub fn check_grid_memory(n1: usize) -> Result<()> {
    if n1 > MAX_N1 {
        return Err(Error::config(
            "system.n1",
            format!("grid of {n1} points exceeds the limit of {MAX_N1}"),
        ));
    }
    Ok(())
}
