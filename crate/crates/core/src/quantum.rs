//! Exact quantum fidelity references.
//!
//! Kicked rotors are propagated on an `n₁`-point position grid with
//! `ħ = 2π/n₁`. A step is the free rotation `exp(-i p²/2ħ)`, applied in the
//! momentum basis via FFT, followed by the kick `exp(-i [W(q) + sV(q)]/ħ)`.
//! For delta kicks this factorization is exact. Uncoupled dimensions give
//! `f^{(D)} = ∏_i f^{(i)}`, so only one-dimensional grids are ever built.
//!
//! Displaced oscillators use the closed-form coherent-state solution, with a
//! split-operator grid propagation as fallback for packets of other widths.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::dynamics::{SystemKind, SystemSpec};
use crate::error::{Error, Result};
use crate::fft::Fft;
use crate::par::{map_indexed, Exec};
use crate::phasespace::{min_image, Domain, GaussianWavepacket};

/// Largest grid the rotor reference will allocate.
pub const MAX_N1: usize = 1 << 24;

/// Rotor wavefunction sampled at `q_m = 2πm/n₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub amplitudes: Vec<Complex64>,
    pub n1: usize,
    pub hbar: f64,
    /// Lowest integer momentum `ℓ` of the ladder `[ℓ̄ - n₁/2, ℓ̄ + n₁/2)`.
    pub ell_min: i64,
}

impl GridWavefunction {
    pub fn dq(&self) -> f64 {
        TAU / self.n1 as f64
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dq()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &GridWavefunction) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.dq()
    }

    /// `⟨q⟩` measured as a displacement from `reference` (nearest image).
    pub fn mean_position(&self, reference: f64) -> f64 {
        let dq = self.dq();
        let w: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(m, z)| z.norm_sqr() * min_image(m as f64 * dq - reference))
            .sum();
        reference + w * dq / self.norm_sqr()
    }

    /// Integer momentum for FFT bin `k` on this state's ladder.
    fn ell(&self, k: usize) -> i64 {
        let n = self.n1 as i64;
        self.ell_min + (k as i64 - self.ell_min).rem_euclid(n)
    }

    /// `⟨p⟩` computed in the momentum basis.
    pub fn mean_momentum(&self, fft: &Fft) -> f64 {
        let mut c = self.amplitudes.clone();
        fft.forward(&mut c);
        let (mut num, mut den) = (0.0, 0.0);
        for (k, z) in c.iter().enumerate() {
            num += z.norm_sqr() * self.hbar * self.ell(k) as f64;
            den += z.norm_sqr();
        }
        num / den
    }
}

/// Samples a one-dimensional packet on the rotor grid.
pub fn discretize_gwp(state: &GaussianWavepacket, n1: usize) -> Result<GridWavefunction> {
    if state.dim() != 1 {
        return Err(Error::usage("discretize_gwp expects a one-dimensional packet"));
    }
    if n1 < 2 || !n1.is_power_of_two() || n1 > MAX_N1 {
        return Err(Error::config("system.n1", format!("n1 = {n1} must be a power of two <= {MAX_N1}")));
    }
    let dq = TAU / n1 as f64;
    let sigma = state.sigma_q[0];
    if sigma < 2.0 * dq {
        return Err(Error::config("state.sigma_q", format!("width {sigma} not resolved by grid spacing {dq}")));
    }
    if sigma > TAU / 10.0 {
        return Err(Error::config("state.sigma_q", format!("width {sigma} wraps around the circle")));
    }
    let hbar = TAU / n1 as f64;
    let (q0, p0) = (state.q_center[0], state.p_center[0]);
    let mut amplitudes: Vec<Complex64> = (0..n1)
        .map(|m| {
            let d = min_image(m as f64 * dq - q0);
            Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), p0 * d / hbar)
        })
        .collect();
    let norm = (amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * dq).sqrt();
    amplitudes.iter_mut().for_each(|z| *z /= norm);
    let ell_bar = (p0 / hbar).round() as i64;
    Ok(GridWavefunction {
        amplitudes,
        n1,
        hbar,
        ell_min: ell_bar - n1 as i64 / 2,
    })
}

/// Precomputed one-step propagator for a rotor with kick `k` and
/// perturbation strength `s`.
#[derive(Debug, Clone)]
pub struct RotorPropagator {
    fft: Fft,
    free: Vec<Complex64>,
    kick: Vec<Complex64>,
}

impl RotorPropagator {
    pub fn new(n1: usize, k: f64, strength: f64) -> Result<Self> {
        let fft = Fft::new(n1)?;
        let hbar = TAU / n1 as f64;
        let dq = TAU / n1 as f64;
        // the free phase ħℓ²/2 is n₁-periodic in ℓ for even n₁, so any ladder works
        let free = (0..n1)
            .map(|kb| {
                // ħℓ²/2 = πℓ²/n₁, reduced exactly in integers
                let r = (kb as u64 * kb as u64) % (2 * n1 as u64);
                Complex64::from_polar(1.0, -PI * r as f64 / n1 as f64)
            })
            .collect();
        let kick = (0..n1)
            .map(|m| {
                let q = m as f64 * dq;
                // -(W + sV)/ħ with W = -k cos q, V = -cos 2q
                Complex64::from_polar(1.0, (k * q.cos() + strength * (2.0 * q).cos()) / hbar)
            })
            .collect();
        Ok(Self { fft, free, kick })
    }

    /// One map step: free rotation, then kick.
    pub fn step(&self, psi: &mut GridWavefunction) {
        let a = &mut psi.amplitudes;
        self.fft.forward(a);
        a.iter_mut().zip(&self.free).for_each(|(z, w)| *z *= w);
        self.fft.inverse(a);
        a.iter_mut().zip(&self.kick).for_each(|(z, w)| *z *= w);
    }

    /// Exact inverse of [`RotorPropagator::step`].
    pub fn step_back(&self, psi: &mut GridWavefunction) {
        let a = &mut psi.amplitudes;
        a.iter_mut().zip(&self.kick).for_each(|(z, w)| *z *= w.conj());
        self.fft.forward(a);
        a.iter_mut().zip(&self.free).for_each(|(z, w)| *z *= w.conj());
        self.fft.inverse(a);
    }

    pub fn fft(&self) -> &Fft {
        &self.fft
    }
}

/// One split-operator step of the rotor with kick `k` and strength `strength`.
pub fn split_step(psi: &GridWavefunction, k: f64, strength: f64) -> Result<GridWavefunction> {
    let prop = RotorPropagator::new(psi.n1, k, strength)?;
    let mut out = psi.clone();
    prop.step(&mut out);
    Ok(out)
}

/// Fidelity amplitude with its squared modulus on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySeries {
    pub times: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub fidelity: Vec<f64>,
}

impl FidelitySeries {
    fn from_amplitude(times: Vec<f64>, amplitude: Vec<Complex64>) -> Self {
        let fidelity = amplitude.iter().map(|z| z.norm_sqr()).collect();
        Self {
            times,
            amplitude,
            fidelity,
        }
    }
}

fn rotor_params(spec: &SystemSpec) -> Result<(f64, usize)> {
    match spec.kind {
        SystemKind::KickedRotor { k, n1 } => Ok((k, n1)),
        _ => Err(Error::usage("rotor quantum reference needs a kicked-rotor system")),
    }
}

/// One-dimensional rotor amplitude `f(t) = ⟨ψ_ε^t|ψ_0^t⟩` for `t = 0..=steps`.
pub fn qm_fidelity_1d(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    steps: usize,
) -> Result<Vec<Complex64>> {
    let (k, n1) = rotor_params(spec)?;
    let psi = discretize_gwp(state, n1)?;
    let p0 = RotorPropagator::new(n1, k, 0.0)?;
    let pe = RotorPropagator::new(n1, k, spec.epsilon)?;
    let norm0 = psi.overlap(&psi);
    let (mut a, mut b) = (psi.clone(), psi);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(b.overlap(&a) / norm0);
    for _ in 0..steps {
        p0.step(&mut a);
        pe.step(&mut b);
        out.push(b.overlap(&a) / norm0);
    }
    Ok(out)
}

/// Multiplies per-dimension amplitudes into the `D`-dimensional fidelity.
pub fn qm_fidelity_product(times: Vec<f64>, per_dim: &[Vec<Complex64>]) -> Result<FidelitySeries> {
    if per_dim.is_empty() {
        return Err(Error::usage("need at least one dimension"));
    }
    if per_dim.iter().any(|s| s.len() != times.len()) {
        return Err(Error::usage("per-dimension series do not share the time grid"));
    }
    let amplitude = (0..times.len())
        .map(|j| per_dim.iter().map(|s| s[j]).product())
        .collect();
    Ok(FidelitySeries::from_amplitude(times, amplitude))
}

/// Extracts dimension `i` of a product packet.
pub fn component(state: &GaussianWavepacket, i: usize) -> GaussianWavepacket {
    GaussianWavepacket {
        q_center: vec![state.q_center[i]],
        p_center: vec![state.p_center[i]],
        sigma_q: vec![state.sigma_q[i]],
        hbar: state.hbar,
        domain: state.domain,
    }
}

fn component_key(state: &GaussianWavepacket, i: usize) -> [u64; 3] {
    [
        state.q_center[i].to_bits(),
        state.p_center[i].to_bits(),
        state.sigma_q[i].to_bits(),
    ]
}

/// `D`-dimensional rotor fidelity; identical dimensions are propagated once.
pub fn qm_fidelity_rotor(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    steps: usize,
    exec: Exec,
) -> Result<FidelitySeries> {
    spec.check_state(state)?;
    let mut distinct: Vec<usize> = Vec::new();
    let mut index_of: HashMap<[u64; 3], usize> = HashMap::new();
    let slots: Vec<usize> = (0..state.dim())
        .map(|i| {
            *index_of.entry(component_key(state, i)).or_insert_with(|| {
                distinct.push(i);
                distinct.len() - 1
            })
        })
        .collect();
    let runs = map_indexed(distinct.len(), exec, |u| qm_fidelity_1d(&component(state, distinct[u]), spec, steps));
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let per_dim: Vec<Vec<Complex64>> = slots.iter().map(|&u| runs[u].clone()).collect();
    qm_fidelity_product((0..=steps).map(|j| j as f64).collect(), &per_dim)
}

fn sho_params(spec: &SystemSpec) -> Result<&[f64]> {
    match &spec.kind {
        SystemKind::DisplacedSho { omega, .. } => Ok(omega),
        _ => Err(Error::usage("oscillator quantum reference needs a displaced-oscillator system")),
    }
}

/// Closed-form amplitude `⟨ψ_ε^t|ψ_0^t⟩` of one coherent state in two
/// displaced wells.
fn sho_coherent_amplitude(q0: f64, p0: f64, hbar: f64, w: f64, eps: f64, t: f64) -> Complex64 {
    let sigma2 = hbar / (2.0 * w);
    // center, momentum and accumulated Lagrangian along the classical path
    let evolve = |s: f64| {
        let c = -s / (w * w);
        let (a, b) = (q0 - c, p0 / w);
        let (sn, cs) = (w * t).sin_cos();
        let q = c + a * cs + b * sn;
        let p = w * (-a * sn + b * cs);
        let (s2, c2) = (2.0 * w * t).sin_cos();
        let action = 0.25 * w * ((b * b - a * a) * s2 - 2.0 * a * b * (1.0 - c2)) + 0.5 * w * w * c * c * t;
        (q, p, action)
    };
    let (qa, pa, ga) = evolve(eps);
    let (qb, pb, gb) = evolve(0.0);
    let d = qb - qa;
    let dp = pb - pa;
    let modulus = (-d * d / (8.0 * sigma2) - dp * dp * sigma2 / (2.0 * hbar * hbar)).exp();
    let phase = (gb - ga) / hbar - (pa + pb) * d / (2.0 * hbar);
    Complex64::from_polar(modulus, phase)
}

/// Split-operator grid amplitude for one oscillator dimension.
fn sho_grid_amplitude(
    q0: f64,
    p0: f64,
    sigma: f64,
    hbar: f64,
    w: f64,
    eps: f64,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    let n = 2048usize;
    let sigma_p = hbar / (2.0 * sigma);
    let reach = q0.abs() + p0.abs() / w + 2.0 * eps.abs() / (w * w) + 10.0 * (sigma + sigma_p / w);
    let (lo, len) = (-reach, 2.0 * reach);
    let dx = len / n as f64;
    let fft = Fft::new(n)?;
    let grid: Vec<f64> = (0..n).map(|m| lo + m as f64 * dx).collect();
    let mut psi: Vec<Complex64> = grid
        .iter()
        .map(|&q| {
            let d = q - q0;
            Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), p0 * d / hbar)
        })
        .collect();
    let norm = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    let kvec: Vec<f64> = (0..n)
        .map(|k| {
            let ks = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            hbar * TAU * ks / len
        })
        .collect();
    let h = 5e-4 * TAU / w;
    let propagate = |psi: &mut Vec<Complex64>, s: f64, dt: f64| {
        let half: Vec<Complex64> = grid
            .iter()
            .map(|&q| Complex64::from_polar(1.0, -(0.5 * w * w * q * q + s * q) * 0.5 * dt / hbar))
            .collect();
        let kin: Vec<Complex64> = kvec
            .iter()
            .map(|&p| Complex64::from_polar(1.0, -0.5 * p * p * dt / hbar))
            .collect();
        psi.iter_mut().zip(&half).for_each(|(z, v)| *z *= v);
        fft.forward(psi);
        psi.iter_mut().zip(&kin).for_each(|(z, v)| *z *= v);
        fft.inverse(psi);
        psi.iter_mut().zip(&half).for_each(|(z, v)| *z *= v);
    };
    let (mut a, mut b) = (psi.clone(), psi);
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t < now {
            return Err(Error::usage("times must be non-decreasing"));
        }
        let substeps = ((t - now) / h).ceil() as usize;
        if substeps > 0 {
            let dt = (t - now) / substeps as f64;
            for _ in 0..substeps {
                propagate(&mut a, eps, dt);
                propagate(&mut b, 0.0, dt);
            }
        }
        now = t;
        out.push(a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dx);
    }
    Ok(out)
}

/// Oscillator quantum fidelity at arbitrary `times`. Coherent packets
/// (`σ_q² = ħ/2ω`) use the closed form; other widths fall back to grid
/// propagation.
pub fn sho_qm_fidelity(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    times: &[f64],
) -> Result<FidelitySeries> {
    spec.check_state(state)?;
    let omega = sho_params(spec)?;
    let mut per_dim = Vec::with_capacity(state.dim());
    for (i, &w) in omega.iter().enumerate() {
        let coherent = (state.sigma_q[i].powi(2) - state.hbar / (2.0 * w)).abs() <= 1e-12 * state.hbar / w;
        let (q0, p0) = (state.q_center[i], state.p_center[i]);
        let series = if coherent {
            times
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        sho_coherent_amplitude(q0, p0, state.hbar, w, spec.epsilon, t)
                    }
                })
                .collect()
        } else {
            sho_grid_amplitude(q0, p0, state.sigma_q[i], state.hbar, w, spec.epsilon, times)?
        };
        per_dim.push(series);
    }
    qm_fidelity_product(times.to_vec(), &per_dim)
}

/// Grid propagation of the oscillator regardless of packet width.
pub fn sho_qm_fidelity_grid(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    times: &[f64],
) -> Result<FidelitySeries> {
    spec.check_state(state)?;
    let omega = sho_params(spec)?;
    if state.domain != Domain::Plane {
        return Err(Error::usage("oscillator states live on the plane"));
    }
    let per_dim = omega
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            sho_grid_amplitude(state.q_center[i], state.p_center[i], state.sigma_q[i], state.hbar, w, spec.epsilon, times)
        })
        .collect::<Result<Vec<_>>>()?;
    qm_fidelity_product(times.to_vec(), &per_dim)
}
