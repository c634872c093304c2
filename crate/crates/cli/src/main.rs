//! `fidelity` command-line tool.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 1 for runtime
//! failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fidelity_core::harness::config::{ExperimentConfig, Method};
use fidelity_core::harness::presets::{run_figure_preset, Preset, DECAY_PACKET};
use fidelity_core::harness::run::{convergence, fmt_f64, run_experiment, write_convergence_csv};
use fidelity_core::harness::timing::time_scaling;
use fidelity_core::{Error, Exec, GaussianWavepacket, SystemSpec};

#[derive(Parser)]
#[command(name = "fidelity", version, about = "Fidelity decay by dephasing representation and classical estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Base random seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write a CSV.
    Run { config: PathBuf },
    /// Run a figure preset.
    Preset {
        name: String,
        #[arg(long, default_value_t = 0.01)]
        scale: f64,
    },
    /// Measure wall time against simulation length (single-threaded).
    Timing {
        method: String,
        /// Config supplying system and state; defaults to one rotor.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated step counts.
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256, 512])]
        t: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Spread of an estimator over independent ensembles.
    Convergence {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        ensembles: usize,
    },
}

fn exec_for(workers: Option<usize>) -> Exec {
    match workers {
        Some(w) => Exec::from_workers(w),
        None => Exec::Parallel,
    }
}

fn load(path: &Path, common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.run.seed = Some(seed);
    }
    Ok(cfg)
}

fn timing_setup(method: &str, config: Option<&Path>) -> Result<(Method, GaussianWavepacket, SystemSpec), Error> {
    let method: Method = method.parse()?;
    let (state, spec) = match config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            (cfg.state()?, cfg.spec()?)
        }
        None => (
            GaussianWavepacket::on_torus(1, DECAY_PACKET.0, DECAY_PACKET.1, 4096)?,
            SystemSpec::kicked_rotor(1, 0.2, 1e-4, 4096)?,
        ),
    };
    if let Method::Cf(alg) = method {
        alg.validate(&state, &spec)?;
    }
    Ok((method, state, spec))
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    let common = &cli.common;
    let exec = exec_for(common.workers);
    match &cli.command {
        Command::Run { config } => {
            let mut cfg = load(config, common)?;
            if let Some(out) = &common.out {
                cfg.run.output = Some(out.clone());
            }
            let path = run_experiment(&cfg, exec)?;
            println!("{}", path.display());
        }
        Command::Preset { name, scale } => {
            let preset: Preset = name.parse()?;
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let files = run_figure_preset(preset, *scale, common.seed.unwrap_or(1), exec, &dir)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Timing { method, config, t, n } => {
            let (method, state, spec) = timing_setup(method, config.as_deref())?;
            let table = time_scaling(&method, &state, &spec, t, *n, common.seed.unwrap_or(1))?;
            let mut text = String::from("t,wall_seconds\n");
            for (t, secs) in &table.rows {
                text.push_str(&format!("{t},{}\n", fmt_f64(*secs)));
            }
            match &common.out {
                Some(out) => std::fs::write(out, &text)?,
                None => print!("{text}"),
            }
            println!(
                "# {} D={} N={} exponent {:.3} ± {:.3}",
                table.method, table.d, table.n, table.fit.slope, table.fit.slope_std_err
            );
        }
        Command::Convergence { config, ensembles } => {
            let cfg = load(config, common)?;
            let rows = convergence(&cfg, *ensembles, exec)?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("convergence.csv"));
            write_convergence_csv(&out, &cfg.method()?.to_string(), &rows)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.common.workers {
        Some(0) => Err(Error::config("workers", "must be at least 1")),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(Error::usage(format!("cannot start worker pool: {e}"))),
        },
        None => dispatch(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
