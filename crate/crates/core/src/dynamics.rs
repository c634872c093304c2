//! Model systems and their exact classical flows.
//!
//! * Kicked rotors, one per dimension, each iterating the map
//!   `q' = q + p (mod 2π)`, `p' = p - k sin q' - s·2 sin 2q'`, i.e. potential
//!   `W(q) = -k cos q` plus perturbation `s·V(q)` with `V(q) = -cos 2q`.
//! * Displaced harmonic oscillators `H = p²/2 + ω²q²/2 + s·q`, whose flow is
//!   an exact rotation about the displaced center `(-s/ω², 0)`.
//!
//! Time is discretized into steps: one kick for the rotor, `dt` for the
//! oscillator. The strength `s` is `0` for `H₀`, `ε` for `H_ε` and `ε/2` for
//! the average Hamiltonian used by the dephasing representation.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasespace::{wrap_angle, Domain, GaussianWavepacket, PhasePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SystemKind {
    KickedRotor {
        k: f64,
        /// Hilbert-space dimension per degree of freedom; `ħ = 2π/n₁`.
        n1: usize,
    },
    DisplacedSho {
        omega: Vec<f64>,
        /// Duration of one propagation step.
        dt: f64,
    },
}

/// Dynamics definition shared by all engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub d: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hamiltonian {
    Unperturbed,
    Perturbed,
    /// `H_{ε/2}`.
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Selects one of the flows `Φ₀^{±t}`, `Φ_ε^{±t}`, `Φ_{ε/2}^{±t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowLabel {
    pub hamiltonian: Hamiltonian,
    pub direction: Direction,
}

/// Default oscillator step: 50 steps per period.
pub const DEFAULT_SHO_DT: f64 = TAU / 50.0;

impl SystemSpec {
    pub fn kicked_rotor(d: usize, k: f64, epsilon: f64, n1: usize) -> Result<Self> {
        let spec = Self {
            kind: SystemKind::KickedRotor { k, n1 },
            d,
            epsilon,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Oscillators with unit frequency in every dimension.
    pub fn displaced_sho(d: usize, epsilon: f64, dt: f64) -> Result<Self> {
        let spec = Self {
            kind: SystemKind::DisplacedSho {
                omega: vec![1.0; d],
                dt,
            },
            d,
            epsilon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::config("system.d", "dimension must be at least 1"));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::config("system.epsilon", "must be finite"));
        }
        match &self.kind {
            SystemKind::KickedRotor { k, n1 } => {
                if !k.is_finite() {
                    return Err(Error::config("system.k", "must be finite"));
                }
                if *n1 < 2 || !n1.is_power_of_two() {
                    return Err(Error::config("system.n1", "must be a power of two >= 2"));
                }
            }
            SystemKind::DisplacedSho { omega, dt } => {
                if omega.len() != self.d {
                    return Err(Error::config("system.omega", "needs one frequency per dimension"));
                }
                if omega.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    return Err(Error::config("system.omega", "frequencies must be positive"));
                }
                if !(*dt > 0.0 && dt.is_finite()) {
                    return Err(Error::config("system.dt", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, SystemKind::KickedRotor { .. })
    }

    /// Physical duration of one step.
    pub fn step_duration(&self) -> f64 {
        match &self.kind {
            SystemKind::KickedRotor { .. } => 1.0,
            SystemKind::DisplacedSho { dt, .. } => *dt,
        }
    }

    pub fn strength(&self, h: Hamiltonian) -> f64 {
        match h {
            Hamiltonian::Unperturbed => 0.0,
            Hamiltonian::Perturbed => self.epsilon,
            Hamiltonian::Average => 0.5 * self.epsilon,
        }
    }

    /// Checks that `state` matches this system's dimension, topology and `ħ`.
    pub fn check_state(&self, state: &GaussianWavepacket) -> Result<()> {
        if state.dim() != self.d {
            return Err(Error::config(
                "state",
                format!("state has dimension {} but system has {}", state.dim(), self.d),
            ));
        }
        match &self.kind {
            SystemKind::KickedRotor { n1, .. } => {
                if state.domain != Domain::Torus {
                    return Err(Error::config("state", "kicked rotor needs a torus state"));
                }
                let hbar = TAU / *n1 as f64;
                if (state.hbar - hbar).abs() > 1e-12 * hbar {
                    return Err(Error::config("state.hbar", format!("must equal 2π/n1 = {hbar}")));
                }
            }
            SystemKind::DisplacedSho { .. } => {
                if state.domain != Domain::Plane {
                    return Err(Error::config("state", "oscillator needs a planar state"));
                }
            }
        }
        Ok(())
    }

    /// Advances `x` in place by one step of the flow with the given strength.
    #[inline]
    pub fn step(&self, x: &mut PhasePoint, strength: f64, direction: Direction) {
        match &self.kind {
            SystemKind::KickedRotor { k, .. } => rotor_step_in_place(x, *k, strength, direction),
            SystemKind::DisplacedSho { omega, dt } => {
                let t = match direction {
                    Direction::Forward => *dt,
                    Direction::Backward => -*dt,
                };
                sho_rotate(x, omega, strength, t)
            }
        }
    }

    pub fn step_flow(&self, x: &mut PhasePoint, flow: FlowLabel) {
        self.step(x, self.strength(flow.hamiltonian), flow.direction)
    }

    /// Advances `x` one forward step and returns `∫ V dτ` over that step.
    ///
    /// For the delta-kicked rotor the integral collapses to `V` evaluated at
    /// the kick position. For the oscillator it is the exact integral of the
    /// sinusoidal trajectory.
    #[inline]
    pub fn step_with_action(&self, x: &mut PhasePoint, strength: f64) -> f64 {
        match &self.kind {
            SystemKind::KickedRotor { k, .. } => {
                rotor_step_in_place(x, *k, strength, Direction::Forward);
                rotor_perturbation(x)
            }
            SystemKind::DisplacedSho { omega, dt } => {
                let integral = sho_position_integral(x, omega, strength, *dt);
                sho_rotate(x, omega, strength, *dt);
                integral
            }
        }
    }
}

#[inline]
fn rotor_perturbation(x: &PhasePoint) -> f64 {
    -x.q.iter().map(|q| (2.0 * q).cos()).sum::<f64>()
}

/// Kick force `k sin q + s·2 sin 2q`, with one `sin_cos` call.
#[inline]
fn rotor_force(q: f64, k: f64, strength: f64) -> f64 {
    let (s, c) = q.sin_cos();
    k * s + strength * 4.0 * s * c
}

#[inline]
fn rotor_step_in_place(x: &mut PhasePoint, k: f64, strength: f64, direction: Direction) {
    match direction {
        Direction::Forward => {
            for (q, p) in x.q.iter_mut().zip(x.p.iter_mut()) {
                *q = wrap_angle(*q + *p);
                *p -= rotor_force(*q, k, strength);
            }
        }
        Direction::Backward => {
            for (q, p) in x.q.iter_mut().zip(x.p.iter_mut()) {
                *p += rotor_force(*q, k, strength);
                *q = wrap_angle(*q - *p);
            }
        }
    }
}

#[inline]
fn sho_rotate(x: &mut PhasePoint, omega: &[f64], strength: f64, t: f64) {
    for ((q, p), &w) in x.q.iter_mut().zip(x.p.iter_mut()).zip(omega) {
        let center = -strength / (w * w);
        let (s, c) = (w * t).sin_cos();
        let u = *q - center;
        let v = *p;
        *q = center + u * c + v / w * s;
        *p = -u * w * s + v * c;
    }
}

/// `∫_0^t Σ_i q_i(τ) dτ` along the exact oscillator flow from `x`.
fn sho_position_integral(x: &PhasePoint, omega: &[f64], strength: f64, t: f64) -> f64 {
    x.q.iter()
        .zip(&x.p)
        .zip(omega)
        .map(|((&q, &p), &w)| {
            let center = -strength / (w * w);
            let (s, c) = (w * t).sin_cos();
            center * t + (q - center) * s / w + p * (1.0 - c) / (w * w)
        })
        .sum()
}

/// Trapezoid-rule version of the oscillator action integral, kept for
/// validating the closed form.
pub fn sho_position_integral_trapezoid(
    x: &PhasePoint,
    spec: &SystemSpec,
    strength: f64,
    substeps: usize,
) -> Result<f64> {
    let SystemKind::DisplacedSho { omega, dt } = &spec.kind else {
        return Err(Error::usage("trapezoid action integral is defined for the oscillator"));
    };
    let h = dt / substeps as f64;
    let mut y = x.clone();
    let v = |y: &PhasePoint| y.q.iter().sum::<f64>();
    let mut acc = 0.5 * v(&y);
    for j in 1..=substeps {
        sho_rotate(&mut y, omega, strength, h);
        acc += if j == substeps { 0.5 * v(&y) } else { v(&y) };
    }
    Ok(acc * h)
}

/// One rotor step of strength `strength` applied to `x`.
pub fn rotor_step(
    x: &PhasePoint,
    spec: &SystemSpec,
    strength: f64,
    direction: Direction,
) -> Result<PhasePoint> {
    let SystemKind::KickedRotor { k, .. } = &spec.kind else {
        return Err(Error::usage("rotor_step needs a kicked-rotor system"));
    };
    check_point(x, spec)?;
    let mut y = x.clone();
    rotor_step_in_place(&mut y, *k, strength, direction);
    Ok(y)
}

/// Exact oscillator flow for time `t` (negative `t` runs backward).
pub fn sho_flow(x: &PhasePoint, spec: &SystemSpec, strength: f64, t: f64) -> Result<PhasePoint> {
    let SystemKind::DisplacedSho { omega, .. } = &spec.kind else {
        return Err(Error::usage("sho_flow needs a displaced-oscillator system"));
    };
    check_point(x, spec)?;
    let mut y = x.clone();
    sho_rotate(&mut y, omega, strength, t);
    Ok(y)
}

/// Loschmidt echo image `x^{-t} = Φ₀^{-t} ∘ Φ_ε^{t} (x⁰)` after `steps` steps.
pub fn echo_point(x0: &PhasePoint, spec: &SystemSpec, steps: usize) -> Result<PhasePoint> {
    check_point(x0, spec)?;
    let mut x = x0.clone();
    echo_in_place(&mut x, spec, steps);
    Ok(x)
}

/// In-place echo; the flows cancel identically when `ε = 0`.
#[inline]
pub(crate) fn echo_in_place(x: &mut PhasePoint, spec: &SystemSpec, steps: usize) {
    if spec.epsilon == 0.0 {
        return;
    }
    for _ in 0..steps {
        spec.step(x, spec.epsilon, Direction::Forward);
    }
    for _ in 0..steps {
        spec.step(x, 0.0, Direction::Backward);
    }
}

/// Perturbation `V(x)`: `-Σ cos 2q_i` for rotors, `Σ q_i` for oscillators.
pub fn perturbation_value(x: &PhasePoint, spec: &SystemSpec) -> Result<f64> {
    check_point(x, spec)?;
    Ok(match spec.kind {
        SystemKind::KickedRotor { .. } => rotor_perturbation(x),
        SystemKind::DisplacedSho { .. } => x.q.iter().sum(),
    })
}

fn check_point(x: &PhasePoint, spec: &SystemSpec) -> Result<()> {
    if x.dim() != spec.d {
        return Err(Error::usage(format!(
            "point has dimension {} but system has {}",
            x.dim(),
            spec.d
        )));
    }
    Ok(())
}
