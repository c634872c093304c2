//! Single experiments and their CSV output.

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::cf::run_cf;
use crate::dr::run_dr;
use crate::dynamics::{SystemKind, SystemSpec};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::quantum::{qm_fidelity_rotor, sho_qm_fidelity};
use crate::stats::{run_seed, summarize, ErrorEstimate};

use super::config::{ExperimentConfig, Method};

pub const CSV_HEADER: [&str; 12] = [
    "time", "F", "f_real", "f_imag", "sigma", "N", "method", "D", "k", "epsilon", "n1", "seed",
];

/// One line of an experiment CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub time: f64,
    pub fidelity: f64,
    pub amplitude: Option<Complex64>,
    pub sigma: Option<f64>,
    pub n: Option<usize>,
    pub method: String,
    pub d: usize,
    pub k: Option<f64>,
    pub epsilon: f64,
    pub n1: Option<usize>,
    pub seed: u64,
}

/// Seventeen significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Row {
    pub fn template(method: &Method, spec: &SystemSpec, n: Option<usize>, seed: u64) -> Self {
        let (k, n1) = match spec.kind {
            SystemKind::KickedRotor { k, n1 } => (Some(k), Some(n1)),
            SystemKind::DisplacedSho { .. } => (None, None),
        };
        Row {
            time: 0.0,
            fidelity: 1.0,
            amplitude: None,
            sigma: None,
            n,
            method: method.to_string(),
            d: spec.d,
            k,
            epsilon: spec.epsilon,
            n1,
            seed,
        }
    }

    fn record(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        vec![
            fmt_f64(self.time),
            fmt_f64(self.fidelity),
            opt(self.amplitude.map(|z| z.re)),
            opt(self.amplitude.map(|z| z.im)),
            opt(self.sigma),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            self.method.clone(),
            self.d.to_string(),
            opt(self.k),
            fmt_f64(self.epsilon),
            self.n1.map(|n| n.to_string()).unwrap_or_default(),
            self.seed.to_string(),
        ]
    }
}

pub fn write_csv(path: &Path, rows: &[Row]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Estimator output at the report steps of one seed.
struct Curve {
    fidelity: Vec<f64>,
    amplitude: Option<Vec<Complex64>>,
}

fn run_once(method: &Method, cfg: &ExperimentConfig, seed: u64, exec: Exec) -> Result<Curve> {
    let spec = cfg.spec()?;
    let state = cfg.state()?;
    let steps = cfg.report_steps();
    let ensemble = Ensemble::new(cfg.n(), seed).with_exec(exec);
    match method {
        Method::Dr => {
            let dr = run_dr(&state, &spec, cfg.run.t_max, &ensemble)?;
            Ok(Curve {
                fidelity: steps.iter().map(|&j| dr.fidelity[j]).collect(),
                amplitude: Some(steps.iter().map(|&j| dr.amplitude[j]).collect()),
            })
        }
        Method::Cf(alg) => Ok(Curve {
            fidelity: run_cf(*alg, &state, &spec, &steps, &ensemble)?.fidelity,
            amplitude: None,
        }),
        Method::Qm => {
            let series = if spec.is_torus() {
                let q = qm_fidelity_rotor(&state, &spec, cfg.run.t_max, exec)?;
                let amp: Vec<Complex64> = steps.iter().map(|&j| q.amplitude[j]).collect();
                amp
            } else {
                let dt = spec.step_duration();
                let times: Vec<f64> = steps.iter().map(|&j| j as f64 * dt).collect();
                sho_qm_fidelity(&state, &spec, &times)?.amplitude
            };
            Ok(Curve {
                fidelity: series.iter().map(|z| z.norm_sqr()).collect(),
                amplitude: Some(series),
            })
        }
    }
}

/// Runs a validated config and returns its CSV rows. With `run.s > 1` the
/// values come from the first seed and `sigma` from all `s` runs.
pub fn experiment_rows(cfg: &ExperimentConfig, exec: Exec) -> Result<Vec<Row>> {
    cfg.validate()?;
    let method = cfg.method()?;
    let spec = cfg.spec()?;
    let seed = cfg.seed();
    let stochastic = method != Method::Qm;
    let first = run_once(&method, cfg, seed, exec)?;
    let sigmas = if stochastic && cfg.s() > 1 {
        let mut runs = vec![first.fidelity.clone()];
        for r in 1..cfg.s() {
            runs.push(run_once(&method, cfg, run_seed(seed, r), exec)?.fidelity);
        }
        Some(summarize(&runs, cfg.n())?)
    } else {
        None
    };
    let n = stochastic.then_some(cfg.n());
    let template = Row::template(&method, &spec, n, seed);
    let dt = spec.step_duration();
    Ok(cfg
        .report_steps()
        .iter()
        .enumerate()
        .map(|(i, &j)| Row {
            time: j as f64 * dt,
            fidelity: first.fidelity[i],
            amplitude: first.amplitude.as_ref().map(|a| a[i]),
            sigma: sigmas.as_ref().map(|s| s[i].sigma),
            ..template.clone()
        })
        .collect())
}

/// Path of the manifest written next to `csv`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_stem().unwrap_or_default().to_os_string();
    name.push(".manifest.toml");
    csv.with_file_name(name)
}

/// Runs `cfg`, writes its CSV to `run.output` and the resolved config next to
/// it. Returns the CSV path.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Exec) -> Result<PathBuf> {
    let resolved = cfg.resolved()?;
    let rows = experiment_rows(&resolved, exec)?;
    let out = resolved.output();
    write_csv(&out, &rows)?;
    std::fs::write(manifest_path(&out), resolved.to_toml()?)?;
    Ok(out)
}

/// Ensemble statistics of a config over `s` seeds at each report step.
pub fn convergence(cfg: &ExperimentConfig, s: usize, exec: Exec) -> Result<Vec<(f64, ErrorEstimate)>> {
    cfg.validate()?;
    let method = cfg.method()?;
    if method == Method::Qm {
        return Err(Error::config("run.method", "the quantum reference is deterministic"));
    }
    if s < 2 {
        return Err(Error::config("ensembles", "need at least 2 ensembles"));
    }
    let seed = cfg.seed();
    let runs = (0..s)
        .map(|r| run_once(&method, cfg, run_seed(seed, r), exec).map(|c| c.fidelity))
        .collect::<Result<Vec<_>>>()?;
    let dt = cfg.spec()?.step_duration();
    let est = summarize(&runs, cfg.n())?;
    Ok(cfg.report_steps().iter().map(|&j| j as f64 * dt).zip(est).collect())
}

pub fn write_convergence_csv(path: &Path, method: &str, rows: &[(f64, ErrorEstimate)]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "F_mean", "sigma", "sigma_of_sigma", "S", "N", "method"])?;
    for (t, e) in rows {
        w.write_record([
            fmt_f64(*t),
            fmt_f64(e.mean),
            fmt_f64(e.sigma),
            fmt_f64(e.sigma_of_sigma),
            e.s.to_string(),
            e.n.to_string(),
            method.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
