//! Dephasing representation of the fidelity amplitude.
//!
//! Each trajectory starts from a Wigner-distributed `x⁰`, is propagated with
//! the average Hamiltonian `H_{ε/2}`, and accumulates the phase
//! `φ = (ε/ħ) ∫ V dτ`. The amplitude is the ensemble average of `e^{iφ}`,
//! evaluated at every step in a single pass, so the cost is linear in time.

use num_complex::Complex64;

use crate::dynamics::SystemSpec;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::par::{chunked_reduce, map_indexed};
use crate::phasespace::GaussianWavepacket;
use crate::rng::StreamRng;
use crate::sum::ComplexSum;

/// DR amplitude and fidelity at every step `0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrSeries {
    pub times: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    /// `|amplitude|²`.
    pub fidelity: Vec<f64>,
    /// Sample standard error of `amplitude` (modulus of the complex error).
    pub amplitude_std_err: Vec<f64>,
    /// Delta-method standard error of `fidelity`.
    pub fidelity_std_err: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

#[derive(Clone)]
struct Moments {
    z: ComplexSum,
    z2: ComplexSum,
}

fn empty(len: usize) -> Vec<Moments> {
    vec![
        Moments {
            z: ComplexSum::default(),
            z2: ComplexSum::default(),
        };
        len
    ]
}

/// Runs the DR estimator over `steps` propagation steps.
pub fn run_dr(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    steps: usize,
    ensemble: &Ensemble,
) -> Result<DrSeries> {
    spec.check_state(state)?;
    ensemble.check()?;
    let scale = spec.epsilon / state.hbar;
    let strength = 0.5 * spec.epsilon;
    let len = steps + 1;

    let acc = chunked_reduce(
        ensemble.n,
        ensemble.exec,
        || empty(len),
        |acc, i| {
            let mut rng = StreamRng::new(ensemble.seed, i as u64);
            let mut x = state.draw_power(1.0, &mut rng);
            let mut phase = 0.0;
            for (j, m) in acc.iter_mut().enumerate() {
                if j > 0 {
                    phase += scale * spec.step_with_action(&mut x, strength);
                }
                let z = Complex64::from_polar(1.0, phase);
                m.z.add(z);
                m.z2.add(z * z);
            }
        },
        |total, part| {
            for (t, p) in total.iter_mut().zip(&part) {
                t.z.merge(&p.z);
                t.z2.merge(&p.z2);
            }
        },
    );

    let n = ensemble.n as f64;
    let mut series = DrSeries {
        times: (0..len).map(|j| j as f64 * spec.step_duration()).collect(),
        amplitude: Vec::with_capacity(len),
        fidelity: Vec::with_capacity(len),
        amplitude_std_err: Vec::with_capacity(len),
        fidelity_std_err: Vec::with_capacity(len),
        n: ensemble.n,
        seed: ensemble.seed,
    };
    for m in &acc {
        let f = m.z.value() / n;
        let z2 = m.z2.value() / n;
        let big_f = f.norm_sqr();
        // population moments of (cos φ, sin φ)
        let var_c = (0.5 * (1.0 + z2.re) - f.re * f.re).max(0.0);
        let var_s = (0.5 * (1.0 - z2.re) - f.im * f.im).max(0.0);
        let cov = 0.5 * z2.im - f.re * f.im;
        let var_big_f =
            4.0 * (f.re * f.re * var_c + f.im * f.im * var_s + 2.0 * f.re * f.im * cov) / n;
        series.amplitude.push(f);
        series.fidelity.push(big_f);
        series.amplitude_std_err.push(((1.0 - big_f).max(0.0) / n).sqrt());
        series.fidelity_std_err.push(var_big_f.max(0.0).sqrt());
    }
    Ok(series)
}

/// DR phases `φ(x⁰_j, t)` of `n` trajectories after `steps` steps.
pub fn sample_phases(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    steps: usize,
    ensemble: &Ensemble,
) -> Result<Vec<f64>> {
    spec.check_state(state)?;
    ensemble.check()?;
    let scale = spec.epsilon / state.hbar;
    let strength = 0.5 * spec.epsilon;
    Ok(map_indexed(ensemble.n, ensemble.exec, |i| {
        let mut rng = StreamRng::new(ensemble.seed, i as u64);
        let mut x = state.draw_power(1.0, &mut rng);
        let mut phase = 0.0;
        for _ in 0..steps {
            phase += scale * spec.step_with_action(&mut x, strength);
        }
        phase
    }))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::usage(format!("target error σ = {sigma} must be positive")));
    }
    Ok(())
}

fn check_fidelity(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::usage(format!("fidelity {f} outside [0, 1]")));
    }
    Ok(())
}

/// Trajectories needed for the amplitude to reach error `σ`:
/// `N = σ⁻² (1 - F)`.
pub fn predict_n_f(sigma: f64, fidelity: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_fidelity(fidelity)?;
    Ok((1.0 - fidelity) / (sigma * sigma))
}

/// Upper bound on trajectories needed for the fidelity: `4σ⁻² F (1 - F)`.
pub fn predict_n_fidelity_bound(sigma: f64, fidelity: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_fidelity(fidelity)?;
    Ok(4.0 * fidelity * (1.0 - fidelity) / (sigma * sigma))
}

/// Trajectories needed for the fidelity when the phase is normally
/// distributed: `2σ⁻² F (1 - F)²`.
pub fn predict_n_fidelity_normal(sigma: f64, fidelity: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_fidelity(fidelity)?;
    Ok(2.0 * fidelity * (1.0 - fidelity).powi(2) / (sigma * sigma))
}

/// Trajectories needed for the fidelity estimated from an empirical phase
/// sample: `2σ⁻² [Re(⟨e^{2iφ}⟩⟨e^{-iφ}⟩²) + F - 2F²]`.
pub fn predict_n_fidelity_general(phases: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if phases.len() < 2 {
        return Err(Error::usage("need at least two phases"));
    }
    let mut a1 = ComplexSum::default();
    let mut a2 = ComplexSum::default();
    for &phi in phases {
        a1.add(Complex64::from_polar(1.0, phi));
        a2.add(Complex64::from_polar(1.0, 2.0 * phi));
    }
    let n = phases.len() as f64;
    let (a1, a2) = (a1.value() / n, a2.value() / n);
    let f = a1.norm_sqr();
    let bracket = (a2 * a1.conj() * a1.conj()).re + f - 2.0 * f * f;
    Ok(2.0 * bracket / (sigma * sigma))
}
