use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor;

/// Discretization of ℝ^{d₁} × ℝ^{d₂}.
///
/// Samples sit at `x_i = -X + i·2X/n_x` on each `x` axis and `y_j = -Y + j·2Y/n_y`
/// on each `y` axis. Values are stored row-major with the `d₁` `x` axes first.
/// The `y` grid is treated as periodic with period `2Y`, so the transformed
/// frequencies are `η = π m / Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d1: usize,
    pub d2: usize,
    pub x_extent: f64,
    pub y_extent: f64,
    pub n_x: usize,
    pub n_y: usize,
    /// Cap on the eigenspace index `k` used by Hermite expansions.
    pub k_max: usize,
}

impl GridSpec {
    pub fn new(d1: usize, d2: usize, x_extent: f64, y_extent: f64, n_x: usize, n_y: usize, k_max: usize) -> Result<Self> {
        let spec = Self { d1, d2, x_extent, y_extent, n_x, n_y, k_max };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 || self.d2 == 0 {
            return Err(Error::InvalidArgument("layer dimensions must be positive".into()));
        }
        if self.n_x < 2 || self.n_y < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 samples per axis, got n_x = {}, n_y = {}",
                self.n_x, self.n_y
            )));
        }
        for (name, v) in [("x_extent", self.x_extent), ("y_extent", self.y_extent)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_extent / self.n_x as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.y_extent / self.n_y as f64
    }

    /// Spacing of the `y` frequency grid.
    pub fn d_eta(&self) -> f64 {
        std::f64::consts::PI / self.y_extent
    }

    pub fn x_points(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| -self.x_extent + i as f64 * self.dx()).collect()
    }

    pub fn y_points(&self) -> Vec<f64> {
        (0..self.n_y).map(|j| -self.y_extent + j as f64 * self.dy()).collect()
    }

    /// Signed frequency index of FFT bin `m`, in `[-n_y/2, n_y/2)`.
    pub fn signed_bin(&self, m: usize) -> i64 {
        let n = self.n_y as i64;
        let m = m as i64;
        if 2 * m < n { m } else { m - n }
    }

    pub fn eta_of_bin(&self, m: usize) -> f64 {
        self.signed_bin(m) as f64 * self.d_eta()
    }

    pub fn x_len(&self) -> usize {
        self.n_x.pow(self.d1 as u32)
    }

    pub fn y_len(&self) -> usize {
        self.n_y.pow(self.d2 as u32)
    }

    pub fn len(&self) -> usize {
        self.x_len() * self.y_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.n_x; self.d1];
        s.extend(std::iter::repeat(self.n_y).take(self.d2));
        s
    }

    pub fn x_shape(&self) -> Vec<usize> {
        vec![self.n_x; self.d1]
    }

    pub fn y_shape(&self) -> Vec<usize> {
        vec![self.n_y; self.d2]
    }

    /// Volume element `dx^{d₁} dy^{d₂}` of the physical grid.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d1 as i32) * self.dy().powi(self.d2 as i32)
    }

    /// Volume element `dx^{d₁} (Δη)^{d₂} / (2π)^{d₂}` of the frequency grid, so that
    /// Parseval holds as an equality of weighted sums.
    pub fn spectral_cell_volume(&self) -> f64 {
        self.dx().powi(self.d1 as i32) * (self.d_eta() / (2.0 * std::f64::consts::PI)).powi(self.d2 as i32)
    }

    /// Coordinates `(x, y)` of flat index `index`.
    pub fn coordinates(&self, index: usize, x: &mut [f64], y: &mut [f64]) {
        let (ix, iy) = (index / self.y_len(), index % self.y_len());
        let mut idx = vec![0; self.d1.max(self.d2)];
        tensor::unravel(ix, &self.x_shape(), &mut idx[..self.d1]);
        for (o, &i) in x.iter_mut().zip(&idx[..self.d1]) {
            *o = -self.x_extent + i as f64 * self.dx();
        }
        tensor::unravel(iy, &self.y_shape(), &mut idx[..self.d2]);
        for (o, &j) in y.iter_mut().zip(&idx[..self.d2]) {
            *o = -self.y_extent + j as f64 * self.dy();
        }
    }
}

/// Complex samples of a function on the grid described by `spec`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch { expected: spec.len(), got: values.len() });
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![Complex64::new(0.0, 0.0); spec.len()] }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64], &[f64]) -> Complex64) -> Self {
        let mut x = vec![0.0; spec.d1];
        let mut y = vec![0.0; spec.d2];
        let values = (0..spec.len())
            .map(|i| {
                spec.coordinates(i, &mut x, &mut y);
                f(&x, &y)
            })
            .collect();
        Self { spec, values }
    }

    /// `(Σ |f|² dx^{d₁} dy^{d₂})^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spec.cell_volume()).sqrt()
    }

    /// `(Σ |f|^p dx^{d₁} dy^{d₂})^{1/p}`.
    pub fn norm_lp(&self, p: f64) -> f64 {
        (self.values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * self.spec.cell_volume()).powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `⟨f, g⟩ = Σ f ḡ dx^{d₁} dy^{d₂}`.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.check_same(other)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.spec.cell_volume())
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: Complex64, other: &GridFunction, beta: Complex64) -> Result<GridFunction> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + beta * b).collect();
        Ok(GridFunction { spec: self.spec, values })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    /// `‖self − reference‖₂ / ‖reference‖₂` (absolute when the reference vanishes).
    pub fn relative_distance(&self, reference: &GridFunction) -> Result<f64> {
        let n = reference.norm_l2();
        Ok(self.sub(reference)?.norm_l2() / if n > 0.0 { n } else { 1.0 })
    }

    fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::InvalidArgument("grid functions live on different grids".into()));
        }
        Ok(())
    }
}
