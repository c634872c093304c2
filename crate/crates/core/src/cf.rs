//! Classical fidelity Monte Carlo estimators.
//!
//! Every estimator averages products of initial densities `ρ = ρ_W` over
//! points drawn from a weight `ρ^M`:
//!
//! | algorithm  | sample              | integrand                                |
//! |------------|---------------------|------------------------------------------|
//! | echo-M     | `x⁰ ~ ρ^M`          | `I_M ρ(x^{-t}) ρ(x⁰)^{1-M}`              |
//! | fid-M      | `x₀^{-t} ~ ρ^M`     | `I_M ρ(x_ε^{-t}) ρ(x₀^{-t})^{1-M}`       |
//! | echo-N-M   | as echo-M           | ratio with `⟨ρ(x⁰)^{2-M}⟩` on the same sample |
//! | fid-N-M    | as fid-M            | ratio with `⟨ρ(x₀^{-t})^{2-M}⟩`          |
//! | echo-1′    | `x⁰ ~ ρ`            | `1 + ⟨ρ(x^{-t}) - ρ(x⁰)⟩`                 |
//!
//! Echo estimators recompute the full forward/backward echo for each reported
//! time and fid-M (`M > 0`) redraws its sample for each time, so reporting
//! every step up to `t` costs `O(t²)`. fid-0 uses a time-independent uniform
//! weight and propagates both backward trajectories incrementally, `O(t)`.
//!
//! Densities are combined in log space: `ρ` reaches `2^D` at the packet
//! center and `I_0 = n₁^D` overflows long before the products do.

use std::fmt;
use std::str::FromStr;

use crate::dynamics::{echo_in_place, Direction, SystemSpec};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::par::chunked_reduce;
use crate::phasespace::GaussianWavepacket;
use crate::rng::StreamRng;
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Fidelity,
    Echo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Standard,
    Echo1Prime,
}

/// One member of the classical fidelity estimator family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfAlgorithm {
    pub picture: Picture,
    pub m: f64,
    pub normalized: bool,
    pub variant: Variant,
}

impl CfAlgorithm {
    pub fn echo(m: f64) -> Self {
        Self {
            picture: Picture::Echo,
            m,
            normalized: false,
            variant: Variant::Standard,
        }
    }

    pub fn fid(m: f64) -> Self {
        Self {
            picture: Picture::Fidelity,
            ..Self::echo(m)
        }
    }

    pub fn echo_normalized(m: f64) -> Self {
        Self {
            normalized: true,
            ..Self::echo(m)
        }
    }

    pub fn fid_normalized(m: f64) -> Self {
        Self {
            normalized: true,
            ..Self::fid(m)
        }
    }

    pub fn echo_1prime() -> Self {
        Self {
            variant: Variant::Echo1Prime,
            ..Self::echo(1.0)
        }
    }

    /// Checks admissibility for a state/system pair.
    pub fn validate(&self, state: &GaussianWavepacket, spec: &SystemSpec) -> Result<()> {
        spec.check_state(state)?;
        if self.variant == Variant::Echo1Prime
            && (self.picture != Picture::Echo || self.m != 1.0 || self.normalized)
        {
            return Err(Error::config("method", "echo-1prime is the M = 1 echo estimator"));
        }
        // Gaussian states have a closed-form I_M, so any M ≥ 0 is admissible
        // here; M = 0 still needs the bounded torus cell.
        state.check_weight(self.m)
    }

    /// True when reporting every step up to `t` costs `O(t)` rather than `O(t²)`.
    pub fn is_linear_cost(&self) -> bool {
        self.picture == Picture::Fidelity && self.m == 0.0
    }
}

impl fmt::Display for CfAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.variant == Variant::Echo1Prime {
            return write!(f, "echo-1prime");
        }
        let pic = match self.picture {
            Picture::Echo => "echo",
            Picture::Fidelity => "fid",
        };
        let norm = if self.normalized { "N-" } else { "" };
        write!(f, "{pic}-{norm}{}", self.m)
    }
}

impl FromStr for CfAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "echo-1prime" || lower == "echo-1'" {
            return Ok(Self::echo_1prime());
        }
        let (picture, rest) = if let Some(r) = lower.strip_prefix("echo-") {
            (Picture::Echo, r)
        } else if let Some(r) = lower.strip_prefix("fid-") {
            (Picture::Fidelity, r)
        } else {
            return Err(Error::config("method", format!("unknown classical algorithm `{s}`")));
        };
        let (normalized, m) = match rest.strip_prefix("n-") {
            Some(m) => (true, m),
            None => (false, rest),
        };
        let m: f64 = m
            .parse()
            .map_err(|_| Error::config("method", format!("cannot read M from `{s}`")))?;
        Ok(Self {
            picture,
            m,
            normalized,
            variant: Variant::Standard,
        })
    }
}

/// Classical fidelity at the requested steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CfSeries {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    /// Within-run standard error (delta method for the normalized ratios).
    pub std_err: Vec<f64>,
    pub n: usize,
    pub algorithm: CfAlgorithm,
    pub seed: u64,
}

#[derive(Clone, Default)]
struct Moments {
    a: NeumaierSum,
    a2: NeumaierSum,
    b: NeumaierSum,
    b2: NeumaierSum,
    ab: NeumaierSum,
}

impl Moments {
    #[inline]
    fn add(&mut self, a: f64, b: f64) {
        self.a.add(a);
        self.a2.add(a * a);
        self.b.add(b);
        self.b2.add(b * b);
        self.ab.add(a * b);
    }

    fn merge(&mut self, o: &Moments) {
        self.a.merge(&o.a);
        self.a2.merge(&o.a2);
        self.b.merge(&o.b);
        self.b2.merge(&o.b2);
        self.ab.merge(&o.ab);
    }
}

/// Runs `algorithm` and reports the fidelity at each entry of `steps`
/// (strictly increasing step counts).
pub fn run_cf(
    algorithm: CfAlgorithm,
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    steps: &[usize],
    ensemble: &Ensemble,
) -> Result<CfSeries> {
    algorithm.validate(state, spec)?;
    ensemble.check()?;
    if steps.is_empty() || steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("report steps must be non-empty and strictly increasing"));
    }
    let m = algorithm.m;
    // I_M only enters the unnormalized standard estimators
    let ln_norm = if algorithm.normalized || algorithm.variant == Variant::Echo1Prime {
        0.0
    } else {
        state.ln_norm_factor(m)?
    };
    let len = steps.len();

    let body = |acc: &mut Vec<Moments>, i: usize| match (algorithm.picture, algorithm.variant) {
        (Picture::Echo, variant) => {
            let mut rng = StreamRng::new(ensemble.seed, i as u64);
            let x0 = state.draw_power(m, &mut rng);
            let l0 = state.ln_density(&x0);
            let denom = (l0 + (1.0 - m) * l0).exp();
            for (slot, &j) in acc.iter_mut().zip(steps) {
                let mut x = x0.clone();
                echo_in_place(&mut x, spec, j);
                let l = state.ln_density(&x);
                let a = match variant {
                    Variant::Standard => (ln_norm + l + (1.0 - m) * l0).exp(),
                    Variant::Echo1Prime => l.exp() - l0.exp(),
                };
                slot.add(a, denom);
            }
        }
        (Picture::Fidelity, _) if m == 0.0 => {
            let mut rng = StreamRng::new(ensemble.seed, i as u64);
            let x0 = state.draw_power(0.0, &mut rng);
            let mut back0 = x0.clone();
            let mut back_eps = x0;
            let mut t = 0;
            for (slot, &j) in acc.iter_mut().zip(steps) {
                while t < j {
                    spec.step(&mut back0, 0.0, Direction::Backward);
                    spec.step(&mut back_eps, spec.epsilon, Direction::Backward);
                    t += 1;
                }
                let l0 = state.ln_density(&back0);
                let le = if spec.epsilon == 0.0 { l0 } else { state.ln_density(&back_eps) };
                slot.add((ln_norm + le + l0).exp(), (l0 + l0).exp());
            }
        }
        (Picture::Fidelity, _) => {
            for (slot, &j) in acc.iter_mut().zip(steps) {
                // fresh weight sample for every reported time
                let mut rng = StreamRng::keyed(ensemble.seed, j as u64 + 1, i as u64);
                let y = state.draw_power(m, &mut rng);
                let ly = state.ln_density(&y);
                let lz = if spec.epsilon == 0.0 || j == 0 {
                    ly
                } else {
                    let mut z = y.clone();
                    for _ in 0..j {
                        spec.step(&mut z, 0.0, Direction::Forward);
                    }
                    for _ in 0..j {
                        spec.step(&mut z, spec.epsilon, Direction::Backward);
                    }
                    state.ln_density(&z)
                };
                slot.add(
                    (ln_norm + lz + (1.0 - m) * ly).exp(),
                    (ly + (1.0 - m) * ly).exp(),
                );
            }
        }
    };

    let acc = chunked_reduce(
        ensemble.n,
        ensemble.exec,
        || vec![Moments::default(); len],
        body,
        |total, part| {
            for (t, p) in total.iter_mut().zip(&part) {
                t.merge(p);
            }
        },
    );

    let n = ensemble.n as f64;
    let mut fidelity = Vec::with_capacity(len);
    let mut std_err = Vec::with_capacity(len);
    for mo in &acc {
        let a = mo.a.value() / n;
        let var_a = (mo.a2.value() / n - a * a).max(0.0);
        if algorithm.normalized {
            let b = mo.b.value() / n;
            let var_b = (mo.b2.value() / n - b * b).max(0.0);
            let cov = mo.ab.value() / n - a * b;
            let r = mo.a.value() / mo.b.value();
            let var_r = (var_a - 2.0 * r * cov + r * r * var_b) / (n * b * b);
            fidelity.push(r);
            std_err.push(var_r.max(0.0).sqrt());
        } else {
            let offset = if algorithm.variant == Variant::Echo1Prime { 1.0 } else { 0.0 };
            fidelity.push(offset + a);
            std_err.push((var_a / n).sqrt());
        }
    }
    let dt = spec.step_duration();
    Ok(CfSeries {
        steps: steps.to_vec(),
        times: steps.iter().map(|&j| j as f64 * dt).collect(),
        fidelity,
        std_err,
        n: ensemble.n,
        algorithm,
        seed: ensemble.seed,
    })
}

fn all_steps(t_max: usize) -> Vec<usize> {
    (0..=t_max).collect()
}

/// echo-M at every step up to `t_max`.
pub fn run_echo_m(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    t_max: usize,
    m: f64,
    ensemble: &Ensemble,
) -> Result<CfSeries> {
    run_cf(CfAlgorithm::echo(m), state, spec, &all_steps(t_max), ensemble)
}

/// fid-M at every step up to `t_max`.
pub fn run_fid_m(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    t_max: usize,
    m: f64,
    ensemble: &Ensemble,
) -> Result<CfSeries> {
    run_cf(CfAlgorithm::fid(m), state, spec, &all_steps(t_max), ensemble)
}

/// echo-N-M at every step up to `t_max`.
pub fn run_echo_n_m(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    t_max: usize,
    m: f64,
    ensemble: &Ensemble,
) -> Result<CfSeries> {
    run_cf(CfAlgorithm::echo_normalized(m), state, spec, &all_steps(t_max), ensemble)
}

/// fid-N-M at every step up to `t_max`.
pub fn run_fid_n_m(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    t_max: usize,
    m: f64,
    ensemble: &Ensemble,
) -> Result<CfSeries> {
    run_cf(CfAlgorithm::fid_normalized(m), state, spec, &all_steps(t_max), ensemble)
}

/// echo-1′ at every step up to `t_max`.
pub fn run_echo_1prime(
    state: &GaussianWavepacket,
    spec: &SystemSpec,
    t_max: usize,
    ensemble: &Ensemble,
) -> Result<CfSeries> {
    run_cf(CfAlgorithm::echo_1prime(), state, spec, &all_steps(t_max), ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::Exec;

    fn rotor(d: usize, eps: f64) -> (GaussianWavepacket, SystemSpec) {
        (
            GaussianWavepacket::on_torus(d, 1.0, 0.6, 256).unwrap(),
            SystemSpec::kicked_rotor(d, 0.2, eps, 256).unwrap(),
        )
    }

    fn within(a: &CfSeries, b: &CfSeries, j: usize, k: f64) -> bool {
        let comb = (a.std_err[j].powi(2) + b.std_err[j].powi(2)).sqrt();
        (a.fidelity[j] - b.fidelity[j]).abs() <= k * comb
    }

    #[test]
    fn names_round_trip() {
        for name in ["echo-2", "fid-0", "echo-N-1", "fid-N-2", "echo-1prime", "echo-1.5"] {
            let alg: CfAlgorithm = name.parse().unwrap();
            assert_eq!(alg.to_string(), name);
        }
        assert_eq!("ECHO-n-2".parse::<CfAlgorithm>().unwrap(), CfAlgorithm::echo_normalized(2.0));
        assert!("dr".parse::<CfAlgorithm>().is_err());
        assert!("echo-x".parse::<CfAlgorithm>().is_err());
    }

    #[test]
    fn exact_at_time_zero() {
        let (state, spec) = rotor(3, 5e-3);
        let ens = Ensemble::new(500, 3);
        for alg in [
            CfAlgorithm::echo(2.0),
            CfAlgorithm::echo_normalized(1.0),
            CfAlgorithm::echo_normalized(0.5),
            CfAlgorithm::fid_normalized(1.0),
            CfAlgorithm::fid_normalized(2.0),
            CfAlgorithm::fid(2.0),
            CfAlgorithm::echo_1prime(),
        ] {
            let s = run_cf(alg, &state, &spec, &[0, 4], &ens).unwrap();
            assert_eq!(s.fidelity[0], 1.0, "{alg}");
            assert_eq!(s.std_err[0], 0.0, "{alg}");
        }
    }

    #[test]
    fn echo_two_equals_normalized_echo_two() {
        let (state, spec) = rotor(2, 5e-3);
        let ens = Ensemble::new(800, 5);
        let a = run_echo_m(&state, &spec, 15, 2.0, &ens).unwrap();
        let b = run_echo_n_m(&state, &spec, 15, 2.0, &ens).unwrap();
        assert_eq!(a.fidelity, b.fidelity);
    }

    #[test]
    fn unperturbed_is_one_in_expectation() {
        let (state, spec) = rotor(1, 0.0);
        let ens = Ensemble::new(20_000, 7);
        for alg in [CfAlgorithm::echo(1.0), CfAlgorithm::echo(2.0), CfAlgorithm::fid(1.0), CfAlgorithm::echo_1prime()] {
            let s = run_cf(alg, &state, &spec, &[0, 5, 10], &ens).unwrap();
            for j in 0..3 {
                assert!((s.fidelity[j] - 1.0).abs() <= 3.0 * s.std_err[j] + 1e-12, "{alg} {j} {}", s.fidelity[j]);
            }
        }
    }

    #[test]
    fn estimators_agree() {
        let (state, spec) = rotor(1, 2e-2);
        let ens = Ensemble::new(40_000, 21);
        let steps = [3, 8];
        let reference = run_cf(CfAlgorithm::echo(2.0), &state, &spec, &steps, &ens).unwrap();
        assert!(reference.fidelity[1] < 0.98);
        for alg in [
            CfAlgorithm::echo(1.0),
            CfAlgorithm::echo_normalized(1.0),
            CfAlgorithm::echo_1prime(),
            CfAlgorithm::fid(2.0),
            CfAlgorithm::fid(1.0),
            CfAlgorithm::fid_normalized(1.0),
        ] {
            let s = run_cf(alg, &state, &spec, &steps, &ens.with_seed(99)).unwrap();
            for j in 0..steps.len() {
                assert!(within(&s, &reference, j, 4.0), "{alg} at {}: {} vs {}", steps[j], s.fidelity[j], reference.fidelity[j]);
            }
        }
    }

    #[test]
    fn serial_and_parallel_agree_bitwise() {
        let (state, spec) = rotor(2, 1e-2);
        for alg in [CfAlgorithm::echo(2.0), CfAlgorithm::fid(0.0), CfAlgorithm::fid_normalized(1.0)] {
            let a = run_cf(alg, &state, &spec, &[0, 2, 5], &Ensemble::new(1000, 1).with_exec(Exec::Sequential)).unwrap();
            let b = run_cf(alg, &state, &spec, &[0, 2, 5], &Ensemble::new(1000, 1).with_exec(Exec::Parallel)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn inadmissible_configurations() {
        let sho = SystemSpec::displaced_sho(1, 0.1, 0.1).unwrap();
        let state = GaussianWavepacket::coherent(vec![0.0], vec![0.0], 1.0).unwrap();
        let ens = Ensemble::new(10, 0);
        assert!(matches!(run_cf(CfAlgorithm::fid(0.0), &state, &sho, &[0], &ens), Err(Error::UnsupportedWeight(_))));
        assert!(run_cf(CfAlgorithm::echo(-1.0), &state, &sho, &[0], &ens).is_err());
        let bad = CfAlgorithm { picture: Picture::Fidelity, ..CfAlgorithm::echo_1prime() };
        assert!(run_cf(bad, &state, &sho, &[0], &ens).is_err());
        assert!(run_cf(CfAlgorithm::echo(2.0), &state, &sho, &[3, 1], &ens).is_err());
        let (torus, _) = rotor(1, 0.0);
        assert!(run_cf(CfAlgorithm::echo(2.0), &torus, &sho, &[0], &ens).is_err());
    }

    #[test]
    fn only_fid_zero_is_linear() {
        assert!(CfAlgorithm::fid(0.0).is_linear_cost());
        assert!(CfAlgorithm::fid_normalized(0.0).is_linear_cost());
        assert!(!CfAlgorithm::fid(2.0).is_linear_cost());
        assert!(!CfAlgorithm::echo(0.0).is_linear_cost());
    }
}
