//! Fidelity decay by the dephasing representation, classical fidelity
//! estimators and exact quantum references.
//!
//! Trajectory loops run through [`par::chunked_reduce`], which splits work
//! with rayon when the `parallel` feature is enabled and gives bit-identical
//! results either way.

pub mod cf;
pub mod dr;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod fft;
pub mod harness;
pub mod par;
pub mod phasespace;
pub mod quantum;
pub mod rng;
pub mod stats;
pub mod sum;

pub use cf::{CfAlgorithm, CfSeries};
pub use dr::DrSeries;
pub use dynamics::SystemSpec;
pub use ensemble::Ensemble;
pub use error::{Error, Result};
pub use par::Exec;
pub use phasespace::{GaussianWavepacket, PhasePoint};
