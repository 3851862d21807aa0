//! One-variable Fourier analysis of symbols: dyadic frequency pieces and
//! Sobolev norms, with `F̂(ξ) = ∫ F(λ) e^{−iλξ} dλ`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::symbol::{DyadicBump, Symbol1D};
use crate::error::{ensure_positive, Error, Result};

/// Equispaced periodic sampling `λ_i = −W + i·2W/n` of the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineGrid1D {
    pub half_width: f64,
    pub n: usize,
}

impl FineGrid1D {
    pub const DEFAULT_LEN: usize = 1 << 16;

    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        ensure_positive("half_width", half_width)?;
        if n < 2 {
            return Err(Error::EmptyGrid);
        }
        Ok(Self { half_width, n })
    }

    /// Window twice as wide as the farthest end of a finite support.
    pub fn around(support: (f64, f64), n: usize) -> Result<Self> {
        let reach = support.0.abs().max(support.1.abs());
        if !reach.is_finite() {
            return Err(Error::InvalidArgument("an unbounded support needs an explicit window".into()));
        }
        Self::new(2.0 * reach, n)
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn xi_step(&self) -> f64 {
        PI / self.half_width
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| -self.half_width + i as f64 * self.step()).collect()
    }

    fn signed(&self, m: usize) -> i64 {
        let (n, m) = (self.n as i64, m as i64);
        if 2 * m < n { m } else { m - n }
    }

    pub fn xi(&self, m: usize) -> f64 {
        self.signed(m) as f64 * self.xi_step()
    }

    /// Rejects symbols that are not negligible on the outer half of the window.
    pub fn check_window(&self, f: &Symbol1D) -> Result<()> {
        let (lo, hi) = f.support();
        let inner = self.half_width / 2.0;
        if lo >= -inner && hi <= inner {
            return Ok(());
        }
        let samples = self.sample(f);
        let peak = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let outer = self
            .points()
            .iter()
            .zip(&samples)
            .filter(|(l, _)| l.abs() > inner)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        if outer > 1e-12 * peak {
            return Err(Error::Aliasing { lo, hi, half_width: self.half_width });
        }
        Ok(())
    }

    pub fn sample(&self, f: &Symbol1D) -> Vec<Complex64> {
        self.points().into_iter().map(|l| f.eval(l)).collect()
    }

    /// `F̂(ξ_m) ≈ Σ_i F(λ_i) e^{−iξ_m λ_i} Δλ`, bins in FFT order.
    pub fn forward(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(self.n).process(&mut buf);
        let h = self.step();
        for (m, v) in buf.iter_mut().enumerate() {
            let phase = if self.signed(m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *v *= phase * h;
        }
        buf
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(m, v)| if self.signed(m).rem_euclid(2) == 0 { *v } else { -v })
            .collect();
        FftPlanner::new().plan_fft_inverse(self.n).process(&mut buf);
        let scale = 1.0 / (2.0 * self.half_width);
        for v in &mut buf {
            *v *= scale;
        }
        buf
    }

    pub fn l2_norm(&self, samples: &[Complex64]) -> f64 {
        (samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.step()).sqrt()
    }
}

/// Samples of `F^{(j)} = (F̂ χ_j)ˇ` on `grid`.
pub fn dyadic_piece_samples(f: &Symbol1D, j: i32, bump: DyadicBump, grid: &FineGrid1D) -> Result<Vec<Complex64>> {
    grid.check_window(f)?;
    let mut spec = grid.forward(&grid.sample(f));
    for (m, v) in spec.iter_mut().enumerate() {
        *v *= bump.chi_j(grid.xi(m), j);
    }
    Ok(grid.inverse(&spec))
}

/// `F^{(j)} = (F̂ χ_j)ˇ` as a piecewise-linear symbol over the grid window.
pub fn dyadic_piece(f: &Symbol1D, j: i32, bump: DyadicBump, grid: &FineGrid1D) -> Result<Symbol1D> {
    let values = dyadic_piece_samples(f, j, bump, grid)?;
    let last = grid.half_width - grid.step();
    Symbol1D::sampled(format!("{}^({j})", f.name()), -grid.half_width, last, values)
}

/// `‖F‖_{L²_s} = ((2π)^{−1} ∫ (1+ξ²)^s |F̂(ξ)|² dξ)^{1/2}`, equal to `‖F‖₂` at `s = 0`.
pub fn sobolev_norm(f: &Symbol1D, s: f64, grid: &FineGrid1D) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("Sobolev order must be nonnegative, got {s}")));
    }
    grid.check_window(f)?;
    let spec = grid.forward(&grid.sample(f));
    let sum: f64 = spec.iter().enumerate().map(|(m, v)| (1.0 + grid.xi(m).powi(2)).powf(s) * v.norm_sqr()).sum();
    Ok((sum * grid.xi_step() / (2.0 * PI)).sqrt())
}

/// `t = 10^{−2 + i/64}` for `i = 0..=256`: 64 points per decade over four decades.
pub fn default_sloc_grid() -> Vec<f64> {
    (0..=256).map(|i| 10f64.powf(-2.0 + i as f64 / 64.0)).collect()
}

/// `max_{t ∈ t_grid} ‖η F(t·)‖_{L²_s}`, a lower approximation of the scale-invariant
/// local Sobolev norm.
pub fn sloc_norm(f: &Symbol1D, s: f64, cutoff: &Symbol1D, t_grid: &[f64], n: usize) -> Result<f64> {
    let (lo, hi) = cutoff.support();
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("cutoff support [{lo}, {hi}] must lie in (0, ∞)")));
    }
    let grid = FineGrid1D::around((lo, hi), n)?;
    let mut best: f64 = 0.0;
    for &t in t_grid {
        ensure_positive("t", t)?;
        let (f, c) = (f.clone(), cutoff.clone());
        let piece = Symbol1D::new("cutoff·F(t·)", (lo, hi), move |l| c.eval(l) * f.eval(t * l))?;
        best = best.max(sobolev_norm(&piece, s, &grid)?);
    }
    Ok(best)
}
