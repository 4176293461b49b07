use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::Grid1D;

/// Forward/inverse FFT pair with an owned scratch buffer.
pub(crate) struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    pub(crate) k: Vec<f64>,
}

impl Spectral {
    pub(crate) fn new(grid: &Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.len());
        let inverse = planner.plan_fft_inverse(grid.len());
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            k: grid.wavenumbers(),
        }
    }

    pub(crate) fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Unnormalized inverse; callers fold 1/n into their multipliers.
    pub(crate) fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }

    /// buf ← IFFT(mult · FFT(buf)) / n.
    pub(crate) fn apply_diagonal(&mut self, buf: &mut [Complex64], mult: &[Complex64]) {
        self.forward(buf);
        buf.iter_mut().zip(mult).for_each(|(b, m)| *b *= m);
        self.inverse(buf);
    }

    /// −½ ψ'' computed spectrally.
    pub(crate) fn kinetic(&mut self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = psi.len() as f64;
        let mut buf = psi.to_vec();
        self.forward(&mut buf);
        buf.iter_mut()
            .zip(&self.k)
            .for_each(|(b, k)| *b *= 0.5 * k * k / n);
        self.inverse(&mut buf);
        buf
    }
}
