//! Thin wrappers over `rustfft` with a per-thread planner cache.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(len)
        } else {
            p.plan_fft_inverse(len)
        }
    })
}

/// Unnormalized forward transform, `X[k] = sum_n x[n] e^{-2 pi i k n / N}`.
pub fn forward(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        plan(buf.len(), true).process(buf);
    }
}

/// Unnormalized inverse transform (no `1/N`).
pub fn inverse(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        plan(buf.len(), false).process(buf);
    }
}

/// Forward transform scaled by `1/sqrt(N)`.
pub fn forward_unitary(buf: &mut [Complex64]) {
    forward(buf);
    scale(buf, 1.0 / (buf.len() as f64).sqrt());
}

/// Inverse transform scaled by `1/sqrt(N)`.
pub fn inverse_unitary(buf: &mut [Complex64]) {
    inverse(buf);
    scale(buf, 1.0 / (buf.len() as f64).sqrt());
}

fn scale(buf: &mut [Complex64], s: f64) {
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// Signed bin index of FFT bin `k` on an `n`-point grid (`-n/2..n/2`).
pub fn signed_bin(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Angular frequency (rad/s) of each FFT bin for a grid of `n` samples at `sample_rate`.
pub fn angular_frequencies(n: usize, sample_rate: f64) -> Vec<f64> {
    let dw = 2.0 * std::f64::consts::PI * sample_rate / n as f64;
    (0..n).map(|k| signed_bin(k, n) as f64 * dw).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_pair_is_identity_and_preserves_energy() {
        let x: Vec<Complex64> = (0..37)
            .map(|i| Complex64::new((i as f64).sin(), (0.3 * i as f64).cos()))
            .collect();
        let e0: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let mut y = x.clone();
        forward_unitary(&mut y);
        let e1: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        assert!((e0 - e1).abs() < 1e-12 * e0);
        inverse_unitary(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn signed_bins() {
        let got: Vec<i64> = (0..6).map(|k| signed_bin(k, 6)).collect();
        assert_eq!(got, vec![0, 1, 2, -3, -2, -1]);
        let got: Vec<i64> = (0..5).map(|k| signed_bin(k, 5)).collect();
        assert_eq!(got, vec![0, 1, 2, -2, -1]);
    }
}
