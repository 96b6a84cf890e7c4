//! Thin wrapper over rustfft: forward/inverse pairs with 1/N on the inverse,
//! plus the angular wavenumber layout matching the transform.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub(crate) struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    len: usize,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        self.forward.process(data);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len);
        self.inverse.process(data);
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Angular wavenumbers k_j for an N-point grid of spacing h, in FFT bin
/// order: non-negative frequencies first, then the negative branch.
pub(crate) fn wavenumbers(len: usize, spacing: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / (len as f64 * spacing);
    (0..len)
        .map(|j| {
            let j = j as i64;
            let half = (len / 2) as i64;
            let idx = if j <= half - 1 + (len as i64 % 2) { j } else { j - len as i64 };
            idx as f64 * dk
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_identity() {
        let n = 64;
        let pair = FftPair::new(n);
        let orig: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut buf = orig.clone();
        pair.forward(&mut buf);
        pair.inverse(&mut buf);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn wavenumber_layout() {
        let k = wavenumbers(8, 0.5);
        let dk = 2.0 * std::f64::consts::PI / 4.0;
        assert!((k[0] - 0.0).abs() < 1e-15);
        assert!((k[1] - dk).abs() < 1e-15);
        assert!((k[3] - 3.0 * dk).abs() < 1e-15);
        assert!((k[4] - -4.0 * dk).abs() < 1e-15);
        assert!((k[7] - -dk).abs() < 1e-15);
    }

    #[test]
    fn spectral_derivative_of_plane_wave() {
        let n = 128;
        let h = 0.1;
        let pair = FftPair::new(n);
        let k0 = 2.0 * std::f64::consts::PI / (n as f64 * h) * 5.0;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| (Complex64::i() * k0 * (j as f64 * h)).exp())
            .collect();
        pair.forward(&mut buf);
        let ks = wavenumbers(n, h);
        for (v, &k) in buf.iter_mut().zip(&ks) {
            *v *= Complex64::i() * k;
        }
        pair.inverse(&mut buf);
        for (j, v) in buf.iter().enumerate() {
            let expect = Complex64::i() * k0 * (Complex64::i() * k0 * (j as f64 * h)).exp();
            assert!((v - expect).norm() < 1e-10, "bin {j}");
        }
    }
}
