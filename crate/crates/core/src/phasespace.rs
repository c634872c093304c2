//! Phase-space points, Gaussian initial states and their Wigner densities.
//!
//! The Wigner function of a Gaussian wavepacket with position width `σ` is
//!
//! ```text
//! ρ_W(q, p) = 2^D ∏_i exp[-(q_i - q̄_i)² / (2σ_i²) - 2σ_i² (p_i - p̄_i)² / ħ²]
//! ```
//!
//! normalized so that `h^-D ∫ ρ_W dq dp = 1` with `h = 2πħ`. Its `M`-th power
//! is again Gaussian, with variances divided by `M`, which gives both the
//! `ρ^M` samplers and the closed form `I_M = (2^(M-1) / M)^D`.

use std::f64::consts::{LN_2, PI, TAU};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Maps an angle to its representative in `[0, 2π)`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Shortest signed displacement on the circle, in `[-π, π)`.
#[inline]
pub fn min_image(d: f64) -> f64 {
    d - TAU * (d / TAU).round()
}

/// A point `x = (q, p)` in `2D`-dimensional phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::usage(format!(
                "q has {} components but p has {}",
                q.len(),
                p.len()
            )));
        }
        if q.is_empty() {
            return Err(Error::usage("phase-space dimension must be at least 1"));
        }
        Ok(Self { q, p })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            q: vec![0.0; d],
            p: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|v| v.is_finite())
    }
}

/// Topology of the configuration space the state lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Plane,
    /// Both `q` and `p` are `2π`-periodic (kicked rotor cell).
    Torus,
}

/// Multidimensional Gaussian wavepacket `ψ`, a product over degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWavepacket {
    pub q_center: Vec<f64>,
    pub p_center: Vec<f64>,
    /// Standard deviation of `|ψ(q)|²` per dimension.
    pub sigma_q: Vec<f64>,
    pub hbar: f64,
    pub domain: Domain,
}

impl GaussianWavepacket {
    pub fn new(
        q_center: Vec<f64>,
        p_center: Vec<f64>,
        sigma_q: Vec<f64>,
        hbar: f64,
        domain: Domain,
    ) -> Result<Self> {
        let d = q_center.len();
        if d == 0 {
            return Err(Error::config("state.q_center", "dimension must be at least 1"));
        }
        if p_center.len() != d || sigma_q.len() != d {
            return Err(Error::config(
                "state",
                "q_center, p_center and sigma_q must have the same length",
            ));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::config("state.hbar", "must be positive"));
        }
        if sigma_q.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config("state.sigma_q", "widths must be positive"));
        }
        Ok(Self {
            q_center,
            p_center,
            sigma_q,
            hbar,
            domain,
        })
    }

    /// Minimum-uncertainty packet with `σ_q = sqrt(ħ/2)` in every dimension.
    pub fn coherent(q_center: Vec<f64>, p_center: Vec<f64>, hbar: f64) -> Result<Self> {
        let sigma = vec![(hbar / 2.0).sqrt(); q_center.len()];
        Self::new(q_center, p_center, sigma, hbar, Domain::Plane)
    }

    /// Coherent packet on the rotor torus with `ħ = 2π/n₁`, identical in all
    /// `d` dimensions.
    pub fn on_torus(d: usize, q_center: f64, p_center: f64, n1: usize) -> Result<Self> {
        let hbar = TAU / n1 as f64;
        Self::new(
            vec![q_center; d],
            vec![p_center; d],
            vec![(hbar / 2.0).sqrt(); d],
            hbar,
            Domain::Torus,
        )
    }

    pub fn dim(&self) -> usize {
        self.q_center.len()
    }

    /// Standard deviation of the momentum marginal in dimension `i`.
    pub fn sigma_p(&self, i: usize) -> f64 {
        self.hbar / (2.0 * self.sigma_q[i])
    }

    /// True when the packet is too wide for its periodic images to be ignored.
    pub fn is_wide_on_torus(&self) -> bool {
        self.domain == Domain::Torus && self.sigma_q.iter().any(|&s| s > TAU / 10.0)
    }

    fn check_dim(&self, x: &PhasePoint) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::usage(format!(
                "point has dimension {} but state has {}",
                x.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `ln ρ_W(x)` without a dimension check. On the torus the nearest
    /// periodic image of the center is used.
    #[inline]
    pub fn ln_density(&self, x: &PhasePoint) -> f64 {
        let inv_h2 = 1.0 / (self.hbar * self.hbar);
        let torus = self.domain == Domain::Torus;
        let mut expo = 0.0;
        for i in 0..self.q_center.len() {
            let mut dq = x.q[i] - self.q_center[i];
            let mut dp = x.p[i] - self.p_center[i];
            if torus {
                dq = min_image(dq);
                dp = min_image(dp);
            }
            let s2 = self.sigma_q[i] * self.sigma_q[i];
            expo += dq * dq / (2.0 * s2) + 2.0 * s2 * dp * dp * inv_h2;
        }
        self.dim() as f64 * LN_2 - expo
    }

    /// Draws one point from `ρ_W^M / ∫ρ_W^M`.
    pub(crate) fn draw_power(&self, m: f64, rng: &mut StreamRng) -> PhasePoint {
        let d = self.dim();
        let mut x = PhasePoint::zeros(d);
        if m == 0.0 {
            for i in 0..d {
                x.q[i] = TAU * rng.uniform();
                x.p[i] = self.p_center[i] - PI + TAU * rng.uniform();
            }
            return x;
        }
        let scale = m.sqrt().recip();
        for i in 0..d {
            let q = self.q_center[i] + self.sigma_q[i] * scale * rng.normal();
            x.q[i] = match self.domain {
                Domain::Torus => wrap_angle(q),
                Domain::Plane => q,
            };
            x.p[i] = self.p_center[i] + self.sigma_p(i) * scale * rng.normal();
        }
        x
    }

    pub(crate) fn check_weight(&self, m: f64) -> Result<()> {
        if !m.is_finite() || m < 0.0 {
            return Err(Error::UnsupportedWeight(format!("M = {m} must be non-negative")));
        }
        if m == 0.0 && self.domain != Domain::Torus {
            return Err(Error::UnsupportedWeight(
                "M = 0 (uniform weight) needs a bounded, periodic phase space".into(),
            ));
        }
        Ok(())
    }

    /// `ln I_M`, usable where `I_M` itself would overflow.
    pub fn ln_norm_factor(&self, m: f64) -> Result<f64> {
        self.check_weight(m)?;
        let d = self.dim() as f64;
        if m == 0.0 {
            // one (2π)² cell holds n₁ = 2π/ħ states per dimension
            return Ok(d * (TAU / self.hbar).ln());
        }
        Ok(d * ((m - 1.0) * LN_2 - m.ln()))
    }
}

/// `ρ_W(x)` of the state at `x`.
pub fn wigner_density(state: &GaussianWavepacket, x: &PhasePoint) -> Result<f64> {
    state.check_dim(x)?;
    Ok(state.ln_density(x).exp())
}

/// `n` independent draws from the Wigner density; point `i` uses stream `i`.
pub fn sample_wigner(state: &GaussianWavepacket, n: usize, seed: u64) -> Result<Vec<PhasePoint>> {
    sample_power_density(state, 1.0, n, seed)
}

/// `n` independent draws from `ρ_W^M`. `M = 0` is the uniform weight over one
/// torus cell and is rejected on the plane.
pub fn sample_power_density(
    state: &GaussianWavepacket,
    m: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<PhasePoint>> {
    if n == 0 {
        return Err(Error::usage("sample size must be at least 1"));
    }
    state.check_weight(m)?;
    Ok((0..n)
        .map(|i| state.draw_power(m, &mut StreamRng::new(seed, i as u64)))
        .collect())
}

/// Normalization `I_M = h^-D ∫ ρ_W^M dx`.
pub fn norm_factor(state: &GaussianWavepacket, m: f64) -> Result<f64> {
    let ln = state.ln_norm_factor(m)?;
    // exact for the special weights, avoiding exp/ln round trips
    if m == 1.0 || m == 2.0 {
        return Ok(1.0);
    }
    if m == 0.0 {
        return Ok((TAU / state.hbar).powi(state.dim() as i32));
    }
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_state(d: usize) -> GaussianWavepacket {
        GaussianWavepacket::new(vec![0.3; d], vec![-0.2; d], vec![1.0; d], 1.0, Domain::Plane)
            .unwrap()
    }

    fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64) {
        let v: Vec<f64> = xs.collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn density_peaks_at_center() {
        for d in [1, 3, 10] {
            let s = unit_state(d);
            let x = PhasePoint::new(s.q_center.clone(), s.p_center.clone()).unwrap();
            assert_relative_eq!(wigner_density(&s, &x).unwrap(), 2f64.powi(d as i32), max_relative = 1e-14);
        }
    }

    #[test]
    fn density_closed_form_one_sigma() {
        let s = unit_state(1);
        let x = PhasePoint::new(vec![1.3], vec![-0.2]).unwrap();
        assert_relative_eq!(wigner_density(&s, &x).unwrap(), 2.0 * (-0.5f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn density_matches_numerical_wigner_transform() {
        // W(q,p) = 2/h ∫ dξ ψ*(q+ξ/2) ψ(q-ξ/2) e^{ipξ/ħ}, scaled by h
        let (hbar, sigma, q0, p0) = (0.7, 0.9, 0.2, 0.4);
        let s = GaussianWavepacket::new(vec![q0], vec![p0], vec![sigma], hbar, Domain::Plane).unwrap();
        let psi = |q: f64| -> num_complex::Complex64 {
            let norm = (2.0 * PI * sigma * sigma).powf(-0.25);
            num_complex::Complex64::from_polar(
                norm * (-(q - q0).powi(2) / (4.0 * sigma * sigma)).exp(),
                p0 * q / hbar,
            )
        };
        for (q, p) in [(0.2, 0.4), (1.0, 0.1), (-0.5, 1.2)] {
            let dxi = 1e-3;
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            let mut xi = -20.0;
            while xi < 20.0 {
                acc += psi(q - xi / 2.0).conj() * psi(q + xi / 2.0)
                    * num_complex::Complex64::from_polar(1.0, -p * xi / hbar);
                xi += dxi;
            }
            let numeric = acc.re * dxi;
            let x = PhasePoint::new(vec![q], vec![p]).unwrap();
            assert_relative_eq!(numeric, wigner_density(&s, &x).unwrap(), max_relative = 1e-8, epsilon = 1e-12);
        }
    }

    #[test]
    fn density_normalized_on_grid() {
        let s = GaussianWavepacket::new(vec![0.0], vec![0.0], vec![0.8], 0.5, Domain::Plane).unwrap();
        let h = TAU * s.hbar;
        let (lq, lp, n) = (12.0, 6.0, 1200);
        let (dq, dp) = (2.0 * lq / n as f64, 2.0 * lp / n as f64);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = PhasePoint::new(vec![-lq + (i as f64 + 0.5) * dq], vec![-lp + (j as f64 + 0.5) * dp]).unwrap();
                acc += s.ln_density(&x).exp();
            }
        }
        assert!((acc * dq * dp / h - 1.0).abs() < 1e-6);
    }

    #[test]
    fn i3_matches_quadrature() {
        let s = GaussianWavepacket::new(vec![0.0], vec![0.0], vec![1.0], 1.0, Domain::Plane).unwrap();
        let (l, n) = (10.0, 1000);
        let d = 2.0 * l / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = PhasePoint::new(vec![-l + (i as f64 + 0.5) * d], vec![-l + (j as f64 + 0.5) * d]).unwrap();
                acc += (3.0 * s.ln_density(&x)).exp();
            }
        }
        let quad = acc * d * d / TAU;
        assert_relative_eq!(quad, 4.0 / 3.0, max_relative = 1e-8);
        assert_relative_eq!(norm_factor(&s, 3.0).unwrap(), 4.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn special_norm_factors() {
        for d in [1, 7, 100] {
            let s = unit_state(d);
            assert_eq!(norm_factor(&s, 1.0).unwrap(), 1.0);
            assert_eq!(norm_factor(&s, 2.0).unwrap(), 1.0);
        }
        let t = GaussianWavepacket::on_torus(2, 1.0, 0.5, 8).unwrap();
        assert_relative_eq!(norm_factor(&t, 0.0).unwrap(), 64.0, max_relative = 1e-12);
        assert!(matches!(norm_factor(&unit_state(1), 0.0), Err(Error::UnsupportedWeight(_))));
    }

    #[test]
    fn wigner_sample_moments() {
        let s = unit_state(1);
        let pts = sample_wigner(&s, 1_000_000, 11).unwrap();
        let (_, vq) = moments(pts.iter().map(|x| x.q[0]));
        let (_, vp) = moments(pts.iter().map(|x| x.p[0]));
        assert!((vq - 1.0).abs() < 0.01, "{vq}");
        assert!((vp - 0.25).abs() < 0.01, "{vp}");
    }

    #[test]
    fn power_two_halves_variance() {
        let s = unit_state(1);
        let pts = sample_power_density(&s, 2.0, 200_000, 5).unwrap();
        let (_, vq) = moments(pts.iter().map(|x| x.q[0]));
        assert!((vq - 0.5).abs() < 0.01, "{vq}");
        assert_eq!(sample_power_density(&s, 1.0, 10, 5).unwrap(), sample_wigner(&s, 10, 5).unwrap());
        assert!(matches!(sample_power_density(&s, 0.0, 10, 5), Err(Error::UnsupportedWeight(_))));
        assert!(sample_wigner(&s, 0, 5).is_err());
        let one = sample_wigner(&s, 1, 5).unwrap();
        assert!(one.len() == 1 && one[0].is_finite());
    }

    #[test]
    fn mean_density_under_itself_is_one() {
        // ⟨ρ_W⟩_{ρ_W} = I_2 / I_1 = 1 in any dimension
        let s = unit_state(3);
        let n = 200_000;
        let vals: Vec<f64> = sample_wigner(&s, n, 9)
            .unwrap()
            .iter()
            .map(|x| s.ln_density(x).exp())
            .collect();
        let (mean, var) = moments(vals.into_iter());
        assert!((mean - 1.0).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn uniform_weight_fills_torus_cell() {
        let t = GaussianWavepacket::on_torus(1, 1.0, 0.5, 64).unwrap();
        let pts = sample_power_density(&t, 0.0, 10_000, 3).unwrap();
        for x in &pts {
            assert!((0.0..TAU).contains(&x.q[0]));
            assert!(x.p[0] >= 0.5 - PI && x.p[0] < 0.5 + PI);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = unit_state(2);
        assert!(wigner_density(&s, &PhasePoint::zeros(3)).is_err());
        assert!(PhasePoint::new(vec![0.0], vec![]).is_err());
    }

    proptest! {
        #[test]
        fn density_is_translation_invariant(dq in -3.0..3.0f64, dp in -3.0..3.0f64, shift in -5.0..5.0f64) {
            let a = unit_state(1);
            let mut b = a.clone();
            b.p_center[0] += shift;
            let xa = PhasePoint::new(vec![0.3 + dq], vec![-0.2 + dp]).unwrap();
            let xb = PhasePoint::new(vec![0.3 + dq], vec![-0.2 + dp + shift]).unwrap();
            let (ra, rb) = (wigner_density(&a, &xa).unwrap(), wigner_density(&b, &xb).unwrap());
            prop_assert!((ra - rb).abs() <= 1e-12 * ra.max(1e-300));
            prop_assert!(ra > 0.0 && ra <= 2.0);
        }

        #[test]
        fn sampling_is_deterministic(seed in any::<u64>(), n in 1usize..20) {
            let s = unit_state(2);
            prop_assert_eq!(sample_wigner(&s, n, seed).unwrap(), sample_wigner(&s, n, seed).unwrap());
        }
    }
}
