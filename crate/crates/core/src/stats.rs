//! Ensemble error measurement and scaling fits.
//!
//! The statistical error of an estimator at trajectory count `N` is the
//! standard deviation of its value over `S` independent runs with disjoint
//! seeds. From it follow the trajectory count needed for a target error
//! (`σ ∝ N^{-1/2}`) and, across dimensions, the growth factor `β` in
//! `N = σ⁻² α β^D`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par::{map_indexed, Exec};

/// Ensemble standard deviation of an estimator at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub mean: f64,
    pub sigma: f64,
    /// Standard error of `sigma` itself, from the ensemble's fourth moment.
    pub sigma_of_sigma: f64,
    pub s: usize,
    pub n: usize,
}

/// As [`ErrorEstimate`] for a complex estimator; `sigma² = ⟨|z - z̄|²⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexErrorEstimate {
    pub mean: Complex64,
    pub sigma: f64,
    pub sigma_of_sigma: f64,
    pub s: usize,
    pub n: usize,
}

/// Seed of run `r` in an ensemble.
pub fn run_seed(base_seed: u64, r: usize) -> u64 {
    base_seed.wrapping_add(r as u64)
}

fn collect_runs<T, F>(s: usize, base_seed: u64, exec: Exec, runner: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(u64) -> Result<Vec<T>> + Sync,
{
    if s < 2 {
        return Err(Error::usage(format!("ensemble count S = {s} must be at least 2")));
    }
    let runs = map_indexed(s, exec, |r| runner(run_seed(base_seed, r)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let len = runs[0].len();
    if runs.iter().any(|r| r.len() != len) {
        return Err(Error::usage("runs returned series of different lengths"));
    }
    Ok(runs)
}

/// `(sigma, sigma_of_sigma)` from squared deviations `|x - x̄|²`.
fn spread(sq_dev: &[f64]) -> (f64, f64) {
    let s = sq_dev.len() as f64;
    let m2 = sq_dev.iter().sum::<f64>() / s;
    let m4 = sq_dev.iter().map(|d| d * d).sum::<f64>() / s;
    let var = m2 * s / (s - 1.0);
    let sigma = var.sqrt();
    let var_of_var = ((m4 - m2 * m2 * (s - 3.0) / (s - 1.0)) / s).max(0.0);
    let sos = if sigma > 0.0 { var_of_var.sqrt() / (2.0 * sigma) } else { 0.0 };
    (sigma, sos)
}

/// Per-time error estimates from already collected runs.
pub fn summarize(runs: &[Vec<f64>], n: usize) -> Result<Vec<ErrorEstimate>> {
    if runs.len() < 2 {
        return Err(Error::usage("need at least two runs"));
    }
    let s = runs.len();
    Ok((0..runs[0].len())
        .map(|j| {
            let mean = runs.iter().map(|r| r[j]).sum::<f64>() / s as f64;
            let dev: Vec<f64> = runs.iter().map(|r| (r[j] - mean).powi(2)).collect();
            let (sigma, sigma_of_sigma) = spread(&dev);
            ErrorEstimate { mean, sigma, sigma_of_sigma, s, n }
        })
        .collect())
}

pub fn summarize_complex(runs: &[Vec<Complex64>], n: usize) -> Result<Vec<ComplexErrorEstimate>> {
    if runs.len() < 2 {
        return Err(Error::usage("need at least two runs"));
    }
    let s = runs.len();
    Ok((0..runs[0].len())
        .map(|j| {
            let mean = runs.iter().map(|r| r[j]).sum::<Complex64>() / s as f64;
            let dev: Vec<f64> = runs.iter().map(|r| (r[j] - mean).norm_sqr()).collect();
            let (sigma, sigma_of_sigma) = spread(&dev);
            ComplexErrorEstimate { mean, sigma, sigma_of_sigma, s, n }
        })
        .collect())
}

/// Runs `runner` with `s` disjoint seeds and measures the spread of its
/// per-time output.
pub fn ensemble_error<F>(runner: F, s: usize, n: usize, base_seed: u64, exec: Exec) -> Result<Vec<ErrorEstimate>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    summarize(&collect_runs(s, base_seed, exec, runner)?, n)
}

pub fn ensemble_error_complex<F>(
    runner: F,
    s: usize,
    n: usize,
    base_seed: u64,
    exec: Exec,
) -> Result<Vec<ComplexErrorEstimate>>
where
    F: Fn(u64) -> Result<Vec<Complex64>> + Sync,
{
    summarize_complex(&collect_runs(s, base_seed, exec, runner)?, n)
}

/// Least-squares fit of `ln σ² = ln(α/N) + D ln β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFit {
    pub alpha: f64,
    pub beta: f64,
    /// Standard error of `beta` from the fit residuals.
    pub beta_std_err: f64,
}

/// Fits `N = σ⁻² α β^D` to errors measured at a common `N` over several `D`.
pub fn fit_beta(sigmas_by_d: &[(usize, f64)], n: usize) -> Result<BetaFit> {
    let mut ds: Vec<usize> = sigmas_by_d.iter().map(|&(d, _)| d).collect();
    ds.sort_unstable();
    ds.dedup();
    if ds.len() < 3 {
        return Err(Error::usage("need at least three distinct dimensions"));
    }
    if sigmas_by_d.iter().any(|&(_, s)| !(s > 0.0 && s.is_finite())) {
        return Err(Error::usage("errors must be positive and finite"));
    }
    let xs: Vec<f64> = sigmas_by_d.iter().map(|&(d, _)| d as f64).collect();
    let ys: Vec<f64> = sigmas_by_d.iter().map(|&(_, s)| (s * s).ln()).collect();
    let line = fit_line(&xs, &ys);
    Ok(BetaFit {
        alpha: line.intercept.exp() * n as f64,
        beta: line.slope.exp(),
        beta_std_err: line.slope.exp() * line.slope_std_err,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_err: f64,
}

/// Ordinary least squares `y = intercept + slope·x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Line {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_std_err = if xs.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Line { slope, intercept, slope_std_err }
}

/// Exponent `a` of `y ∝ x^a` by least squares in log-log space.
pub fn power_law_exponent(xs: &[f64], ys: &[f64]) -> Line {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly)
}

/// `N·(σ/σ_target)²`, the trajectory count that reaches `target_sigma`.
pub fn required_n_real(target_sigma: f64, measured: &ErrorEstimate) -> Result<f64> {
    if !(target_sigma > 0.0) {
        return Err(Error::usage("target error must be positive"));
    }
    Ok(measured.n as f64 * (measured.sigma / target_sigma).powi(2))
}

/// [`required_n_real`] rounded up to a whole trajectory count.
pub fn required_n(target_sigma: f64, measured: &ErrorEstimate) -> Result<usize> {
    Ok(required_n_real(target_sigma, measured)?.ceil() as usize)
}

/// Index of the sample whose value is closest to `target` around the first
/// downward crossing of a decaying curve.
pub fn matched_index(curve: &[f64], target: f64) -> Option<usize> {
    let j = curve.iter().position(|&f| f <= target)?;
    if j > 0 && (curve[j - 1] - target).abs() < (curve[j] - target).abs() {
        Some(j - 1)
    } else {
        Some(j)
    }
}

/// Time in `[lo, hi]` where a decreasing `f` crosses `target`, by bisection.
pub fn bisect_time<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    if (f(lo) - target) * (f(hi) - target) > 0.0 {
        return Err(Error::usage("target is not bracketed"));
    }
    let rising = f(hi) > f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > target) != rising {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn zero_spread_gives_zero_sigma() {
        let est = ensemble_error(|_| Ok(vec![1.0, 1.0]), 10, 100, 0, Exec::Sequential).unwrap();
        assert!(est.iter().all(|e| e.sigma == 0.0 && e.sigma_of_sigma == 0.0));
        assert!(ensemble_error(|_| Ok(vec![1.0]), 1, 100, 0, Exec::Sequential).is_err());
    }

    #[test]
    fn sigma_of_sigma_near_normal_value() {
        let s = 400;
        let est = ensemble_error(
            |seed| {
                let mut r = StreamRng::new(seed, 0);
                Ok(vec![2.0 * r.normal()])
            },
            s,
            1,
            17,
            Exec::Parallel,
        )
        .unwrap()[0];
        assert!((est.sigma - 2.0).abs() < 3.0 * est.sigma_of_sigma);
        let normal = est.sigma / (2.0 * (s as f64 - 1.0)).sqrt();
        assert!(est.sigma_of_sigma > 0.5 * normal && est.sigma_of_sigma < 2.0 * normal);
    }

    #[test]
    fn exact_beta_recovered() {
        let pts: Vec<(usize, f64)> = [1, 2, 4, 8].iter().map(|&d| (d, 0.3 * 1.4f64.powf(d as f64 / 2.0))).collect();
        let fit = fit_beta(&pts, 1000).unwrap();
        assert!((fit.beta - 1.4).abs() < 1e-6);
        assert!((fit.alpha - 0.09 * 1000.0).abs() < 1e-6);
        assert!(fit_beta(&pts[..2], 10).is_err());
        assert!(fit_beta(&[(1, 0.1), (1, 0.2), (2, 0.1)], 10).is_err());
    }

    #[test]
    fn required_n_square_law() {
        let est = ErrorEstimate { mean: 0.5, sigma: 0.02, sigma_of_sigma: 0.001, s: 100, n: 1000 };
        assert_eq!(required_n(0.02, &est).unwrap(), 1000);
        assert_eq!(required_n(0.01, &est).unwrap(), 4000);
        assert!(required_n(0.04, &est).unwrap() < 1000);
        assert!(required_n(0.0, &est).is_err());
    }

    #[test]
    fn crossing_helpers() {
        let curve = [1.0, 0.97, 0.93, 0.88, 0.8];
        assert_eq!(matched_index(&curve, 0.9), Some(3));
        assert_eq!(matched_index(&curve, 0.94), Some(2));
        assert_eq!(matched_index(&curve, 0.1), None);
        let t = bisect_time(|t: f64| (-t).exp(), 0.5, 0.0, 5.0).unwrap();
        assert!((t - 2f64.ln()).abs() < 1e-12);
        assert!(bisect_time(|t: f64| (-t).exp(), 2.0, 0.0, 5.0).is_err());
    }

    #[test]
    fn power_law_slope() {
        let xs = [10.0, 20.0, 40.0, 80.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert!((power_law_exponent(&xs, &ys).slope - 1.7).abs() < 1e-12);
    }
}
