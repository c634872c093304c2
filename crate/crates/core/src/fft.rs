//! Iterative radix-2 decimation-in-time FFT.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Precomputed twiddles and bit-reversal permutation for one transform size.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    rev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::usage(format!("FFT length {n} is not a power of two")));
        }
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        // e^{-2πik/n}, k < n/2, computed directly rather than by recurrence
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / n as f64))
            .collect();
        Ok(Self { n, twiddles, rev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `X_k = Σ_j x_j e^{-2πijk/n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.n as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.n, "buffer length does not match plan");
        for i in 0..self.n {
            let j = self.rev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < self.n {
            let stride = self.n / (2 * half);
            for block in data.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let t = hi[k] * w;
                    hi[k] = lo[k] - t;
                    lo[k] += t;
                }
            }
            half *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| v * Complex64::from_polar(1.0, -TAU * (j * k % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    fn random(n: usize, seed: u64) -> Vec<Complex64> {
        let mut r = StreamRng::new(seed, 0);
        (0..n).map(|_| Complex64::new(r.normal(), r.normal())).collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1, 2, 4, 8, 64, 256] {
            let x = random(n, n as u64);
            let mut y = x.clone();
            Fft::new(n).unwrap().forward(&mut y);
            let want = naive_dft(&x);
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).norm() < 1e-11 * n as f64, "n={n}");
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let fft = Fft::new(4096).unwrap();
        let x = random(4096, 2);
        let mut y = x.clone();
        fft.forward(&mut y);
        fft.inverse(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Fft::new(12).is_err());
        assert!(Fft::new(0).is_err());
    }
}
