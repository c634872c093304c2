use crate::error::{Error, Result};
use crate::par::Exec;

/// Trajectory budget and random seed for one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ensemble {
    pub n: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Ensemble {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::usage("trajectory count N must be at least 1"));
        }
        Ok(())
    }
}
