use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{hermite_all, MultiIndex};
use crate::error::{ensure_positive, Error, Result};
use crate::tensor;

/// Tensor sampling grid for Hermite expansions on ℝ^{d₁}: `n` points per axis
/// at `x_i = -X + i·2X/n`, trapezoid weight `2X/n` per axis.
///
/// The half-width is chosen so that the classical turning point
/// `√(2k_max+1)·r^{-1/2}` of the highest retained mode sits inside `[-X/2, X/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteEvalPlan {
    d1: usize,
    k_max: usize,
    half_width: f64,
    n: usize,
    #[serde(skip)]
    points: Vec<f64>,
}

impl HermiteEvalPlan {
    pub fn new(d1: usize, k_max: usize, half_width: f64, n: usize) -> Result<Self> {
        if d1 == 0 {
            return Err(Error::InvalidArgument("d1 must be positive".into()));
        }
        if n == 0 {
            return Err(Error::EmptyGrid);
        }
        ensure_positive("half_width", half_width)?;
        let dx = 2.0 * half_width / n as f64;
        let points = (0..n).map(|i| -half_width + i as f64 * dx).collect();
        Ok(Self { d1, k_max, half_width, n, points })
    }

    /// Plan wide enough for modes up to `k_max` at scale `r`, with `n` points per axis.
    pub fn for_scale(d1: usize, k_max: usize, r: f64, n: usize) -> Result<Self> {
        ensure_positive("r", r)?;
        Self::new(d1, k_max, Self::half_width_for(k_max, r), n)
    }

    pub fn half_width_for(k_max: usize, r: f64) -> f64 {
        let turning = ((2 * k_max + 1) as f64).sqrt() / r.sqrt();
        (2.0 * turning).max(10.0 / r.sqrt())
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Per-axis trapezoid weight.
    pub fn weight(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Weight of one cell of the tensor grid.
    pub fn cell_volume(&self) -> f64 {
        self.weight().powi(self.d1 as i32)
    }

    pub fn grid_len(&self) -> usize {
        self.n.pow(self.d1 as u32)
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.n; self.d1]
    }

    /// Coordinates of flat grid index `index`.
    pub fn point(&self, index: usize, out: &mut [f64]) {
        let mut idx = vec![0; self.d1];
        tensor::unravel(index, &self.shape(), &mut idx);
        for (o, i) in out.iter_mut().zip(idx) {
            *o = self.points[i];
        }
    }

    /// Samples `Φ_ν^r` on the full tensor grid.
    pub fn sample_mode(&self, nu: &MultiIndex, r: f64) -> Result<Vec<f64>> {
        ensure_positive("r", r)?;
        if nu.dim() != self.d1 {
            return Err(Error::DimensionMismatch { expected: self.d1, got: nu.dim() });
        }
        let m_max = nu.entries().iter().copied().max().unwrap_or(0);
        let basis = ScaledBasis1D::new(m_max, r, &self.points);
        let mut out = vec![0.0; self.grid_len()];
        let mut idx = vec![0; self.d1];
        let shape = self.shape();
        for (flat, o) in out.iter_mut().enumerate() {
            tensor::unravel(flat, &shape, &mut idx);
            *o = nu.entries().iter().zip(&idx).map(|(&m, &i)| basis.value(m, i)).product();
        }
        Ok(out)
    }
}

/// `r^{1/4} h_m(√r x_i)` for `m ≤ m_max` on a set of 1-D points.
#[derive(Debug, Clone)]
pub struct ScaledBasis1D {
    m_max: usize,
    n: usize,
    /// Row-major `(m_max+1) x n`.
    values: Vec<f64>,
    /// Row-major `n x (m_max+1)`.
    transposed: Vec<f64>,
}

impl ScaledBasis1D {
    pub fn new(m_max: usize, r: f64, points: &[f64]) -> Self {
        let n = points.len();
        let m1 = m_max + 1;
        let sr = r.sqrt();
        let amp = r.powf(0.25);
        let mut values = vec![0.0; m1 * n];
        let mut transposed = vec![0.0; m1 * n];
        for (i, &x) in points.iter().enumerate() {
            for (m, h) in hermite_all(m_max, sr * x).into_iter().enumerate() {
                values[m * n + i] = amp * h;
                transposed[i * m1 + m] = amp * h;
            }
        }
        Self { m_max, n, values, transposed }
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn value(&self, m: usize, i: usize) -> f64 {
        self.values[m * self.n + i]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.n..(m + 1) * self.n]
    }

    /// 1-D Gram matrix `G[l][m] = w Σ_i φ_l(x_i) φ_m(x_i)`.
    pub fn gram(&self, weight: f64) -> Vec<f64> {
        let m1 = self.m_max + 1;
        let mut g = vec![0.0; m1 * m1];
        for l in 0..m1 {
            for m in l..m1 {
                let s: f64 = self.row(l).iter().zip(self.row(m)).map(|(a, b)| a * b).sum::<f64>() * weight;
                g[l * m1 + m] = s;
                g[m * m1 + l] = s;
            }
        }
        g
    }

    /// Largest `K ≤ m_max` such that the leading `(K+1) x (K+1)` block of the
    /// Gram matrix is within `tol` of the identity, or `None` if even the
    /// ground state fails.
    pub fn resolved_order(&self, weight: f64, tol: f64) -> Option<usize> {
        let m1 = self.m_max + 1;
        let g = self.gram(weight);
        let mut best = None;
        for k in 0..m1 {
            let ok = (0..=k).all(|l| {
                let expected = if l == k { 1.0 } else { 0.0 };
                (g[l * m1 + k] - expected).abs() <= tol
            });
            if !ok {
                break;
            }
            best = Some(k);
        }
        best
    }

    /// Coefficients `(g, Φ_ν)` for all `ν ∈ [0, m_max]^{d₁}` of a function sampled
    /// on the `n^{d₁}` tensor grid.
    pub fn analyze(&self, g: &[Complex64], d1: usize, weight: f64) -> Vec<Complex64> {
        let mut shape = vec![self.n; d1];
        let mut data = g.to_vec();
        let weighted: Vec<f64> = self.values.iter().map(|v| v * weight).collect();
        for axis in 0..d1 {
            let (d, s) = tensor::contract_axis(&data, &shape, axis, &weighted, self.m_max + 1);
            data = d;
            shape = s;
        }
        data
    }

    /// Inverse of [`analyze`](Self::analyze): `Σ_ν c_ν Φ_ν` on the tensor grid.
    pub fn synthesize(&self, coeffs: &[Complex64], d1: usize) -> Vec<Complex64> {
        let mut shape = vec![self.m_max + 1; d1];
        let mut data = coeffs.to_vec();
        for axis in 0..d1 {
            let (d, s) = tensor::contract_axis(&data, &shape, axis, &self.transposed, self.n);
            data = d;
            shape = s;
        }
        data
    }
}

/// Multiplies each coefficient `c_ν` of a `[0, m1)^{d₁}` tensor by `factor(|ν|₁)`.
pub(crate) fn mask_coefficients(
    coeffs: &[Complex64],
    d1: usize,
    m1: usize,
    factor: impl Fn(usize) -> f64,
) -> Vec<Complex64> {
    let shape = vec![m1; d1];
    let mut idx = vec![0; d1];
    coeffs
        .iter()
        .enumerate()
        .map(|(flat, c)| {
            tensor::unravel(flat, &shape, &mut idx);
            c * factor(idx.iter().sum())
        })
        .collect()
}

/// `max |G − I|` over all pairs of modes with `|ν|₁, |μ|₁ ≤ k_max`, where `G` is
/// the Gram matrix of `{Φ_ν^r}` under the plan's tensor trapezoid rule. The
/// tensor rule factorizes, so `G_{νμ} = Π_j G¹_{ν_j μ_j}`.
pub fn gram_residual(plan: &HermiteEvalPlan, r: f64) -> Result<f64> {
    ensure_positive("r", r)?;
    let k_max = plan.k_max();
    let basis = ScaledBasis1D::new(k_max, r, plan.points());
    let g1 = basis.gram(plan.weight());
    let m1 = k_max + 1;
    let modes: Vec<MultiIndex> = (0..=k_max).flat_map(|k| super::multi_indices(plan.d1(), k)).collect();
    let mut worst: f64 = 0.0;
    for (a, nu) in modes.iter().enumerate() {
        for mu in &modes[a..] {
            let v: f64 = nu.entries().iter().zip(mu.entries()).map(|(&l, &m)| g1[l * m1 + m]).product();
            let expected = if nu == mu { 1.0 } else { 0.0 };
            worst = worst.max((v - expected).abs());
        }
    }
    Ok(worst)
}

/// Applies `-Δ + r²|x|²` to a real function sampled on the plan's tensor grid,
/// using fourth-order central differences with zero extension outside the grid.
pub fn fd_oscillator(plan: &HermiteEvalPlan, r: f64, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != plan.grid_len() {
        return Err(Error::DimensionMismatch { expected: plan.grid_len(), got: values.len() });
    }
    let n = plan.n();
    let d1 = plan.d1();
    let h2 = plan.weight().powi(2);
    let shape = plan.shape();
    let mut out = vec![0.0; values.len()];
    let mut idx = vec![0; d1];
    let at = |flat: usize, axis: usize, offset: isize, idx: &[usize]| -> f64 {
        let i = idx[axis] as isize + offset;
        if i < 0 || i >= n as isize {
            return 0.0;
        }
        let stride = n.pow((d1 - 1 - axis) as u32);
        values[(flat as isize + offset * stride as isize) as usize]
    };
    for (flat, o) in out.iter_mut().enumerate() {
        tensor::unravel(flat, &shape, &mut idx);
        let mut acc = 0.0;
        let mut rad2 = 0.0;
        for axis in 0..d1 {
            let lap = -at(flat, axis, -2, &idx) + 16.0 * at(flat, axis, -1, &idx) - 30.0 * values[flat]
                + 16.0 * at(flat, axis, 1, &idx)
                - at(flat, axis, 2, &idx);
            acc -= lap / (12.0 * h2);
            rad2 += plan.points()[idx[axis]].powi(2);
        }
        *o = acc + r * r * rad2 * values[flat];
    }
    Ok(out)
}

/// Relative residual `‖L^r Φ_ν^r − (2|ν|₁+d₁) r Φ_ν^r‖₂ / ‖Φ_ν^r‖₂` on the plan grid.
pub fn eigen_residual(nu: &MultiIndex, r: f64, plan: &HermiteEvalPlan) -> Result<f64> {
    let phi = plan.sample_mode(nu, r)?;
    let lphi = fd_oscillator(plan, r, &phi)?;
    let ev = (2 * nu.length_1() + nu.dim()) as f64 * r;
    let num: f64 = lphi.iter().zip(&phi).map(|(l, p)| (l - ev * p).powi(2)).sum();
    let den: f64 = phi.iter().map(|p| p * p).sum();
    Ok((num / den).sqrt())
}
