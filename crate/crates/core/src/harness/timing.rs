//! Wall-clock cost of computing a full fidelity curve.

use std::time::Instant;

use crate::cf::run_cf;
use crate::dr::run_dr;
use crate::dynamics::SystemSpec;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::phasespace::GaussianWavepacket;
use crate::quantum::{qm_fidelity_rotor, sho_qm_fidelity};
use crate::stats::{power_law_exponent, Line};

use super::config::Method;

pub const REPETITIONS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TimingTable {
    pub method: String,
    pub d: usize,
    pub n: usize,
    /// `(t, median wall seconds)`.
    pub rows: Vec<(usize, f64)>,
    /// Fit of `ln seconds` against `ln t`; `slope` is the cost exponent.
    pub fit: Line,
}

/// Computes the fidelity at every step `0..=t` once and returns the elapsed
/// seconds.
pub fn timed_curve(
    method: &Method,
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    t: usize,
    ensemble: &Ensemble,
) -> Result<f64> {
    let start = Instant::now();
    match method {
        Method::Dr => {
            std::hint::black_box(run_dr(state, spec, t, ensemble)?);
        }
        Method::Cf(alg) => {
            let steps: Vec<usize> = (0..=t).collect();
            std::hint::black_box(run_cf(*alg, state, spec, &steps, ensemble)?);
        }
        Method::Qm => {
            if spec.is_torus() {
                std::hint::black_box(qm_fidelity_rotor(state, spec, t, ensemble.exec)?);
            } else {
                let dt = spec.step_duration();
                let times: Vec<f64> = (0..=t).map(|j| j as f64 * dt).collect();
                std::hint::black_box(sho_qm_fidelity(state, spec, &times)?);
            }
        }
    }
    Ok(start.elapsed().as_secs_f64())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Single-threaded wall time of full curves up to each `t` in `t_list`
/// (median of [`REPETITIONS`], after one unmeasured warm-up run) and the
/// fitted power-law exponent.
pub fn time_scaling(
    method: &Method,
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    t_list: &[usize],
    n: usize,
    seed: u64,
) -> Result<TimingTable> {
    if t_list.len() < 3 || t_list.windows(2).any(|w| w[0] >= w[1]) || t_list[0] == 0 {
        return Err(Error::usage("need at least three positive, ascending times"));
    }
    let ensemble = Ensemble::new(n, seed).with_exec(Exec::Sequential);
    timed_curve(method, state, spec, t_list[0], &ensemble)?;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let reps = (0..REPETITIONS)
            .map(|_| timed_curve(method, state, spec, t, &ensemble))
            .collect::<Result<Vec<_>>>()?;
        rows.push((t, median(reps)));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.max(1e-9)).collect();
    Ok(TimingTable {
        method: method.to_string(),
        d: spec.d,
        n,
        fit: power_law_exponent(&xs, &ys),
        rows,
    })
}
