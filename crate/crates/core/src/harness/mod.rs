//! Experiment configuration, runners, figure presets and timing.

pub mod config;
pub mod presets;
pub mod protocol;
pub mod run;
pub mod timing;

pub use config::{ExperimentConfig, Method};
pub use presets::{run_figure_preset, Preset};
pub use run::{convergence, experiment_rows, run_experiment, Row};
pub use timing::{time_scaling, TimingTable};
