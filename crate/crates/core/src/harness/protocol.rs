//! Matched-fidelity measurement protocol shared by presets and checks.
//!
//! Errors of different systems are compared at the time where each system's
//! fidelity reaches a common target, found on a pilot run.

use crate::cf::{run_cf, CfAlgorithm};
use crate::dr::run_dr;
use crate::dynamics::SystemSpec;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::phasespace::GaussianWavepacket;
use crate::stats::{ensemble_error, matched_index, ErrorEstimate};

use super::config::Method;

/// Longest pilot, in steps.
pub const MAX_PILOT_STEPS: usize = 1 << 14;

/// Step where the DR fidelity first comes closest to `target`. The pilot
/// horizon doubles until the curve crosses.
pub fn matched_step_dr(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    target: f64,
    pilot: &Ensemble,
) -> Result<usize> {
    let mut t = 16;
    loop {
        let dr = run_dr(state, spec, t, pilot)?;
        if let Some(j) = matched_index(&dr.fidelity, target) {
            return Ok(j);
        }
        if t >= MAX_PILOT_STEPS {
            return Err(Error::usage(format!("fidelity stays above {target} for {t} steps")));
        }
        t *= 2;
    }
}

/// Step where a decaying `f` comes closest to `target`, by doubling and
/// integer bisection; `f` is evaluated at O(log t) steps.
pub fn matched_step<F: FnMut(usize) -> Result<f64>>(mut f: F, target: f64) -> Result<usize> {
    let mut lo = 0;
    let mut hi = 1;
    let mut f_hi = f(hi)?;
    while f_hi > target {
        if hi >= MAX_PILOT_STEPS {
            return Err(Error::usage(format!("fidelity stays above {target} for {hi} steps")));
        }
        lo = hi;
        hi *= 2;
        f_hi = f(hi)?;
    }
    let mut f_lo = if lo == 0 { 1.0 } else { f(lo)? };
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let fm = f(mid)?;
        if fm > target {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    Ok(if (f_lo - target).abs() < (f_hi - target).abs() { lo } else { hi })
}

/// Matched step for a classical estimator from single-time pilot runs.
pub fn matched_step_cf(
    alg: CfAlgorithm,
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    target: f64,
    pilot: &Ensemble,
) -> Result<usize> {
    matched_step(|j| Ok(run_cf(alg, state, spec, &[j], pilot)?.fidelity[0]), target)
}

/// Estimator value at one step for one seed.
pub fn fidelity_at(
    method: &Method,
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    step: usize,
    ensemble: &Ensemble,
) -> Result<f64> {
    match method {
        Method::Dr => Ok(run_dr(state, spec, step, ensemble)?.fidelity[step]),
        Method::Cf(alg) => Ok(run_cf(*alg, state, spec, &[step], ensemble)?.fidelity[0]),
        Method::Qm => Err(Error::usage("the quantum reference has no statistical error")),
    }
}

/// Spread of the estimator at `step` over `s` runs of `n` trajectories.
#[allow(clippy::too_many_arguments)]
pub fn sigma_at(
    method: &Method,
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    step: usize,
    n: usize,
    s: usize,
    base_seed: u64,
    exec: Exec,
) -> Result<ErrorEstimate> {
    let est = ensemble_error(
        |seed| Ok(vec![fidelity_at(method, state, spec, step, &Ensemble::new(n, seed).with_exec(Exec::Sequential))?]),
        s,
        n,
        base_seed,
        exec,
    )?;
    Ok(est[0])
}
