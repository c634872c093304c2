//! Desk-scaled figure presets.
//!
//! | preset | content |
//! |--------|---------|
//! | fig1a  | echo-1, echo-1′, echo-2 in 100 rotors |
//! | fig1b  | DR, echo-2, quantum product and converged classical product in 100 rotors |
//! | fig2a  | error vs `D` at `F≈0.3`, displaced oscillators |
//! | fig2b  | error vs `D` at `F≈0.9`, rotors |
//! | fig3   | DR error vs `N` in three dynamical regimes at `F≈0.94` |
//! | fig4a  | wall time vs `t`, `D = 20` |
//! | fig4b  | wall time vs `t`, `D = 1` |
//!
//! `scale ∈ (0, 1]` multiplies trajectory counts and ensemble sizes and
//! shortens dimension lists; `scale = 1` uses the full counts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::dynamics::SystemSpec;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::phasespace::GaussianWavepacket;
use crate::quantum::sho_qm_fidelity;
use crate::stats::bisect_time;

use super::config::{check_grid_memory, ExperimentConfig, Method, RunConfig, StateConfig, SystemConfig, SystemName};
use super::protocol::{matched_step_dr, sigma_at};
use super::run::{experiment_rows, fmt_f64, write_csv, Row};
use super::timing::time_scaling;

/// Packet center showing the quantum fidelity freeze in 100 rotors.
pub const FREEZE_PACKET: (f64, f64) = (0.5, 1.8);
/// Packet center with a steadily decaying fidelity at `k = 0.2`.
pub const DECAY_PACKET: (f64, f64) = (1.5, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1a,
    Fig1b,
    Fig2a,
    Fig2b,
    Fig3,
    Fig4a,
    Fig4b,
}

pub const ALL_PRESETS: [Preset; 7] = [
    Preset::Fig1a,
    Preset::Fig1b,
    Preset::Fig2a,
    Preset::Fig2b,
    Preset::Fig3,
    Preset::Fig4a,
    Preset::Fig4b,
];

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Preset::Fig1a => "fig1a",
            Preset::Fig1b => "fig1b",
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig3 => "fig3",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
        };
        f.write_str(s)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_PRESETS
            .into_iter()
            .find(|p| p.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::config("preset", format!("unknown preset `{s}`")))
    }
}

#[derive(Debug, Serialize)]
struct Manifest {
    preset: String,
    scale: f64,
    seed: u64,
    curve: Vec<CurveEntry>,
}

#[derive(Debug, Serialize)]
struct CurveEntry {
    file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    run: Vec<ExperimentConfig>,
}

struct Ctx<'a> {
    scale: f64,
    seed: u64,
    exec: Exec,
    dir: &'a Path,
    name: String,
    entries: Vec<CurveEntry>,
    files: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn count(&self, full: f64, min: usize) -> usize {
        ((full * self.scale).ceil() as usize).max(min)
    }

    fn take<T: Clone>(&self, xs: &[T], min: usize) -> Vec<T> {
        let k = ((xs.len() as f64 * self.scale).ceil() as usize).clamp(min.min(xs.len()), xs.len());
        xs[..k].to_vec()
    }

    fn path(&self, curve: &str) -> PathBuf {
        self.dir.join(format!("{}_{curve}.csv", self.name))
    }

    fn emit(&mut self, curve: &str, rows: &[Row], entry: CurveEntry) -> Result<()> {
        let path = self.path(curve);
        write_csv(&path, rows)?;
        self.files.push(path);
        self.entries.push(entry);
        Ok(())
    }

    fn entry(&self, curve: &str, target_f: Option<f64>, note: Option<&str>, run: Vec<ExperimentConfig>) -> CurveEntry {
        CurveEntry {
            file: format!("{}_{curve}.csv", self.name),
            target_f,
            note: note.map(str::to_string),
            run,
        }
    }

    /// Resolves `cfg`, runs it and writes one CSV.
    fn curve(&mut self, curve: &str, cfg: ExperimentConfig, note: Option<&str>) -> Result<Vec<Row>> {
        let mut cfg = cfg;
        cfg.run.output = Some(self.path(curve));
        let cfg = cfg.resolved()?;
        let rows = experiment_rows(&cfg, self.exec)?;
        let entry = self.entry(curve, None, note, vec![cfg]);
        self.emit(curve, &rows, entry)?;
        Ok(rows)
    }
}

fn rotor(d: usize, k: f64, epsilon: f64, n1: usize) -> SystemConfig {
    SystemConfig {
        kind: SystemName::KickedRotor,
        d,
        epsilon,
        k: Some(k),
        n1: Some(n1),
        omega: None,
        dt: None,
    }
}

fn sho(d: usize, epsilon: f64, dt: f64) -> SystemConfig {
    SystemConfig {
        kind: SystemName::DisplacedSho,
        d,
        epsilon,
        k: None,
        n1: None,
        omega: Some(1.0),
        dt: Some(dt),
    }
}

fn packet((q, p): (f64, f64)) -> StateConfig {
    StateConfig { q, p, sigma_q: None, hbar: None }
}

fn config(system: SystemConfig, state: StateConfig, method: &str, t_max: usize, n: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        system,
        state,
        run: RunConfig {
            method: method.to_string(),
            t_max,
            n: Some(n),
            s: None,
            seed: Some(seed),
            report_every: None,
            output: None,
        },
    }
}

/// Runs preset `name` and writes its CSV files plus `<name>_manifest.toml`
/// into `dir`. Returns all written paths, manifest last.
pub fn run_figure_preset(name: Preset, scale: f64, seed: u64, exec: Exec, dir: &Path) -> Result<Vec<PathBuf>> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::config("scale", format!("must lie in (0, 1], got {scale}")));
    }
    let mut ctx = Ctx {
        scale,
        seed,
        exec,
        dir,
        name: name.to_string(),
        entries: Vec::new(),
        files: Vec::new(),
    };
    std::fs::create_dir_all(dir)?;
    match name {
        Preset::Fig1a => fig1a(&mut ctx)?,
        Preset::Fig1b => fig1b(&mut ctx)?,
        Preset::Fig2a => fig2a(&mut ctx)?,
        Preset::Fig2b => fig2b(&mut ctx)?,
        Preset::Fig3 => fig3(&mut ctx)?,
        Preset::Fig4a => fig4(&mut ctx, 20)?,
        Preset::Fig4b => fig4(&mut ctx, 1)?,
    }
    let manifest = Manifest {
        preset: ctx.name.clone(),
        scale,
        seed,
        curve: std::mem::take(&mut ctx.entries),
    };
    let path = dir.join(format!("{}_manifest.toml", ctx.name));
    std::fs::write(&path, toml::to_string(&manifest).map_err(|e| Error::config("manifest", e.to_string()))?)?;
    ctx.files.push(path);
    Ok(ctx.files)
}

const FIG1_N1: usize = 8192;

fn fig1_system(d: usize) -> SystemConfig {
    rotor(d, 0.2, 3e-4, FIG1_N1)
}

fn fig1a(ctx: &mut Ctx) -> Result<()> {
    check_grid_memory(FIG1_N1)?;
    let n_simple = ctx.count(7e7, 1000);
    let n2 = ctx.count(2048.0, 64);
    for (method, n) in [("echo-1", n_simple), ("echo-1prime", n_simple), ("echo-2", n2)] {
        let mut cfg = config(fig1_system(100), packet(FREEZE_PACKET), method, 40, n, ctx.seed);
        cfg.run.report_every = Some(4);
        ctx.curve(method, cfg, None)?;
    }
    Ok(())
}

fn fig1b(ctx: &mut Ctx) -> Result<()> {
    check_grid_memory(FIG1_N1)?;
    let t_max = 400;
    let n = ctx.count(2048.0, 64);
    ctx.curve("qm", config(fig1_system(100), packet(FREEZE_PACKET), "qm", t_max, 1, ctx.seed), None)?;
    ctx.curve("dr", config(fig1_system(100), packet(FREEZE_PACKET), "dr", t_max, n, ctx.seed), None)?;
    let mut echo = config(fig1_system(100), packet(FREEZE_PACKET), "echo-2", t_max, n, ctx.seed);
    echo.run.report_every = Some(10);
    ctx.curve("echo2", echo, None)?;

    // converged classical fidelity as the 100th power of one dimension
    let mut one = config(fig1_system(1), packet(FREEZE_PACKET), "echo-2", t_max, ctx.count(1e5, 1000), ctx.seed);
    one.run.report_every = Some(10);
    let one = one.resolved()?;
    let rows: Vec<Row> = experiment_rows(&one, ctx.exec)?
        .into_iter()
        .map(|r| Row {
            fidelity: r.fidelity.powi(100),
            method: "echo-2-product".to_string(),
            d: 100,
            ..r
        })
        .collect();
    let entry = ctx.entry("cf_product", None, Some("one-dimensional echo-2 raised to the power 100"), vec![one]);
    ctx.emit("cf_product", &rows, entry)
}

/// One row per point of an error-vs-parameter scan.
fn sigma_row(method: &Method, cfg: &ExperimentConfig, step: usize, s: usize, exec: Exec) -> Result<Row> {
    let spec = cfg.spec()?;
    let state = cfg.state()?;
    let est = sigma_at(method, &state, &spec, step, cfg.n(), s, cfg.seed(), exec)?;
    Ok(Row {
        time: step as f64 * spec.step_duration(),
        fidelity: est.mean,
        sigma: Some(est.sigma),
        ..Row::template(method, &spec, Some(cfg.n()), cfg.seed())
    })
}

const SCAN_METHODS: [&str; 5] = ["echo-1", "echo-1prime", "echo-N-1", "echo-2", "dr"];
const FIG2A_STEPS: usize = 25;
const FIG2A_EPSILON: f64 = 1.0;

/// Oscillator time where the exact fidelity of `d` dimensions equals `target`.
pub fn sho_matched_time(d: usize, epsilon: f64, hbar: f64, target: f64) -> Result<f64> {
    let spec = SystemSpec::displaced_sho(d, epsilon, 1.0)?;
    let state = GaussianWavepacket::coherent(vec![0.0; d], vec![0.0; d], hbar)?;
    let f = |t: f64| {
        sho_qm_fidelity(&state, &spec, &[t])
            .map(|s| s.fidelity[0])
            .unwrap_or(f64::NAN)
    };
    bisect_time(f, target, 1e-9, std::f64::consts::PI)
}

fn fig2a(ctx: &mut Ctx) -> Result<()> {
    let target = 0.3;
    let ds: Vec<usize> = ctx.take(&(1..=10).collect::<Vec<_>>(), 3);
    let n = ctx.count(1e7, 1000);
    let s = ctx.count(100.0, 4);
    for name in SCAN_METHODS {
        let method: Method = name.parse()?;
        let mut rows = Vec::new();
        let mut runs = Vec::new();
        for &d in &ds {
            let t = sho_matched_time(d, FIG2A_EPSILON, 1.0, target)?;
            let cfg = config(sho(d, FIG2A_EPSILON, t / FIG2A_STEPS as f64), packet((0.0, 0.0)), name, FIG2A_STEPS, n, ctx.seed)
                .resolved()?;
            rows.push(sigma_row(&method, &cfg, FIG2A_STEPS, s, ctx.exec)?);
            let mut rec = cfg;
            rec.run.s = Some(s);
            runs.push(rec);
        }
        let entry = ctx.entry(name, Some(target), None, runs);
        ctx.emit(name, &rows, entry)?;
    }
    Ok(())
}

fn fig2b(ctx: &mut Ctx) -> Result<()> {
    let target = 0.9;
    let ds: Vec<usize> = ctx.take(&[1, 2, 5, 10, 20, 50, 100], 3);
    let n = ctx.count(5e5, 1000);
    let s = ctx.count(100.0, 4);
    let pilot_n = 4000;
    let mut steps = Vec::new();
    for &d in &ds {
        let cfg = config(rotor(d, 0.2, 1e-4, 131072), packet(DECAY_PACKET), "dr", 0, pilot_n, ctx.seed);
        let pilot = Ensemble::new(pilot_n, ctx.seed).with_exec(ctx.exec);
        steps.push(matched_step_dr(&cfg.state()?, &cfg.spec()?, target, &pilot)?);
    }
    for name in SCAN_METHODS {
        let method: Method = name.parse()?;
        let mut rows = Vec::new();
        let mut runs = Vec::new();
        for (&d, &step) in ds.iter().zip(&steps) {
            let mut cfg = config(rotor(d, 0.2, 1e-4, 131072), packet(DECAY_PACKET), name, step, n, ctx.seed).resolved()?;
            rows.push(sigma_row(&method, &cfg, step, s, ctx.exec)?);
            cfg.run.s = Some(s);
            runs.push(cfg);
        }
        let entry = ctx.entry(name, Some(target), Some("time matched on a DR pilot"), runs);
        ctx.emit(name, &rows, entry)?;
    }
    Ok(())
}

/// The three dynamical regimes compared for DR errors: name, `D`, `k`, `ε`,
/// packet.
pub const REGIMES: [(&str, usize, f64, f64, (f64, f64)); 3] = [
    ("fgr", 10, 18.0, 6.4e-6, FREEZE_PACKET),
    ("gaussian", 100, 0.2, 6.4e-6, DECAY_PACKET),
    ("algebraic", 1, 0.2, 6.4e-4, DECAY_PACKET),
];

fn fig3(ctx: &mut Ctx) -> Result<()> {
    let target = 0.94;
    let s = ctx.count(100.0, 4);
    let mut ns: Vec<usize> = [256.0, 1024.0, 4096.0, 16384.0, 65536.0]
        .iter()
        .map(|&n| ctx.count(n, 16))
        .collect();
    ns.dedup();
    for (name, d, k, eps, center) in REGIMES {
        let system = rotor(d, k, eps, 131072);
        let probe = config(system.clone(), packet(center), "dr", 0, 4000, ctx.seed);
        let pilot = Ensemble::new(4000, ctx.seed).with_exec(ctx.exec);
        let step = matched_step_dr(&probe.state()?, &probe.spec()?, target, &pilot)?;
        let mut rows = Vec::new();
        let mut runs = Vec::new();
        for &n in &ns {
            let mut cfg = config(system.clone(), packet(center), "dr", step, n, ctx.seed).resolved()?;
            rows.push(sigma_row(&Method::Dr, &cfg, step, s, ctx.exec)?);
            cfg.run.s = Some(s);
            runs.push(cfg);
        }
        let entry = ctx.entry(name, Some(target), Some("time matched on a DR pilot"), runs);
        ctx.emit(name, &rows, entry)?;
    }
    Ok(())
}

fn fig4(ctx: &mut Ctx, d: usize) -> Result<()> {
    let t_list = [50, 100, 200, 400];
    let n = ctx.count(1000.0, 16);
    let path = ctx.path("timing");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["method", "D", "N", "t", "wall_seconds", "exponent"])?;
    let mut runs = Vec::new();
    // fid-0 needs the bounded torus cell, so it is timed on rotors
    let cases = [
        ("dr", false),
        ("echo-1", false),
        ("echo-2", false),
        ("fid-2", false),
        ("fid-0", true),
    ];
    for (name, torus) in cases {
        let system = if torus { rotor(d, 0.2, 1e-4, 4096) } else { sho(d, 0.3, crate::dynamics::DEFAULT_SHO_DT) };
        let state = if torus { packet(DECAY_PACKET) } else { packet((0.0, 0.0)) };
        let cfg = config(system, state, name, *t_list.last().unwrap(), n, ctx.seed).resolved()?;
        let table = time_scaling(&cfg.method()?, &cfg.state()?, &cfg.spec()?, &t_list, n, ctx.seed)?;
        for (t, secs) in &table.rows {
            w.write_record([
                name.to_string(),
                d.to_string(),
                n.to_string(),
                t.to_string(),
                fmt_f64(*secs),
                fmt_f64(table.fit.slope),
            ])?;
        }
        runs.push(cfg);
    }
    w.flush()?;
    ctx.files.push(path);
    let entry = ctx.entry("timing", None, Some("single-threaded, median of 3 after a warm-up run"), runs);
    ctx.entries.push(entry);
    Ok(())
}
