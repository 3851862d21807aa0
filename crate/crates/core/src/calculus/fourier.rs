//! Fourier transform in the `y` layer, `F₂f(x, η) = ∫ f(x, y) e^{−iη·y} dy`,
//! discretized as `Σ_j f(x, y_j) e^{−iη·y_j} dy^{d₂}` at `η = π m / Y`.
//!
//! The inverse is `(2π)^{−d₂} Σ_m F(x, η_m) e^{iη_m·y} (Δη)^{d₂}`, and the two are
//! exact inverses on the grid. Parseval reads
//! `Σ |f|² dx^{d₁} dy^{d₂} = Σ |F|² dx^{d₁} (Δη/2π)^{d₂}`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::grid::{GridFunction, GridSpec};

/// Samples of `F₂f` on the grid `x_i × η_m`, with `η` bins in FFT order on each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct YSpectrum {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl YSpectrum {
    /// `(Σ |F|² dx^{d₁} (Δη/2π)^{d₂})^{1/2}`, equal to the physical L² norm.
    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spec.spectral_cell_volume()).sqrt()
    }

    /// Frequency vector of flat `y` bin index `m`.
    pub fn eta(&self, m: usize, out: &mut [f64]) {
        let mut idx = vec![0; self.spec.d2];
        crate::tensor::unravel(m, &self.spec.y_shape(), &mut idx);
        for (o, i) in out.iter_mut().zip(idx) {
            *o = self.spec.eta_of_bin(i);
        }
    }

    pub fn eta_norm(&self, m: usize) -> f64 {
        let mut e = vec![0.0; self.spec.d2];
        self.eta(m, &mut e);
        e.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Copies the `x` plane at flat `y` bin `m`.
    pub fn plane(&self, m: usize) -> Vec<Complex64> {
        let ny = self.spec.y_len();
        (0..self.spec.x_len()).map(|i| self.values[i * ny + m]).collect()
    }
}

/// Transforms along one axis of a row-major tensor, in parallel over lines.
pub(crate) fn fft_axis(data: &mut [Complex64], shape: &[usize], axis: usize, fft: &Arc<dyn Fft<f64>>) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let lines: Vec<Vec<Complex64>> = (0..outer * inner)
        .into_par_iter()
        .map(|line| {
            let (o, i) = (line / inner, line % inner);
            let base = o * n * inner + i;
            let mut buf: Vec<Complex64> = (0..n).map(|k| data[base + k * inner]).collect();
            fft.process(&mut buf);
            buf
        })
        .collect();
    for (line, buf) in lines.into_iter().enumerate() {
        let (o, i) = (line / inner, line % inner);
        let base = o * n * inner + i;
        for (k, v) in buf.into_iter().enumerate() {
            data[base + k * inner] = v;
        }
    }
}

/// `(−1)^{m₁+…+m_{d₂}}` for the signed bins of flat `y` index `m`: the phase
/// `e^{iη·Y}` from the grid offset `y_0 = −Y`.
fn offset_phase(spec: &GridSpec, m: usize) -> f64 {
    let mut idx = vec![0; spec.d2];
    crate::tensor::unravel(m, &spec.y_shape(), &mut idx);
    let parity: i64 = idx.iter().map(|&i| spec.signed_bin(i)).sum();
    if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 }
}

fn transform(spec: &GridSpec, values: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let mut data = values.to_vec();
    let shape = spec.shape();
    let ny = spec.y_len();
    let phases: Vec<f64> = (0..ny).map(|m| offset_phase(spec, m)).collect();
    if inverse {
        for (i, v) in data.iter_mut().enumerate() {
            *v *= phases[i % ny];
        }
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(spec.n_y) } else { planner.plan_fft_forward(spec.n_y) };
    for axis in spec.d1..spec.d1 + spec.d2 {
        fft_axis(&mut data, &shape, axis, &fft);
    }
    let scale = if inverse { (1.0 / (2.0 * spec.y_extent)).powi(spec.d2 as i32) } else { spec.dy().powi(spec.d2 as i32) };
    for (i, v) in data.iter_mut().enumerate() {
        *v *= if inverse { scale } else { scale * phases[i % ny] };
    }
    data
}

pub fn fourier_y(f: &GridFunction) -> YSpectrum {
    YSpectrum { spec: f.spec, values: transform(&f.spec, &f.values, false) }
}

pub fn inverse_fourier_y(s: &YSpectrum) -> GridFunction {
    GridFunction { spec: s.spec, values: transform(&s.spec, &s.values, true) }
}
