//! Hermite functions, the scaled eigenfunctions of `-Δ + r²|x|²` on ℝ^{d₁},
//! and the kernels of its eigenspace projections.
//!
//! All evaluation goes through the normalized three-term recurrence
//! `h_{ℓ+1}(u) = u √(2/(ℓ+1)) h_ℓ(u) − √(ℓ/(ℓ+1)) h_{ℓ−1}(u)`, carried out on
//! mantissas with a running logarithmic scale so that neither the Gaussian
//! factor nor the polynomial growth overflow or underflow prematurely.

mod basis;

pub use basis::{eigen_residual, fd_oscillator, gram_residual, HermiteEvalPlan, ScaledBasis1D};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::tensor;

const RESCALE: f64 = 1e200;

/// `π^{-1/4}`, the value of `h_0(0)`.
pub fn pi_quarter() -> f64 {
    PI.powf(-0.25)
}

/// Multiindex `ν ∈ ℕ^{d₁}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        Self { entries }
    }

    pub fn zeros(d1: usize) -> Self {
        Self { entries: vec![0; d1] }
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// `|ν|₁`.
    pub fn length_1(&self) -> usize {
        self.entries.iter().sum()
    }
}

/// Eigenvalue label of the Hermite operator on ℝ^{d₁}: index `k` with
/// bracket `[k] = 2k + d₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenIndex {
    pub k: usize,
    pub d1: usize,
}

impl EigenIndex {
    pub fn new(k: usize, d1: usize) -> Result<Self> {
        if d1 == 0 {
            return Err(Error::InvalidArgument("d1 must be positive".into()));
        }
        Ok(Self { k, d1 })
    }

    pub fn bracket(&self) -> usize {
        2 * self.k + self.d1
    }
}

/// `[k] = 2k + d₁` as a float.
pub fn bracket(k: usize, d1: usize) -> f64 {
    (2 * k + d1) as f64
}

/// All multiindices of length `d1` with `|ν|₁ = k`, in lexicographic order.
pub fn multi_indices(d1: usize, k: usize) -> Vec<MultiIndex> {
    fn fill(prefix: &mut Vec<usize>, remaining: usize, slots: usize, out: &mut Vec<MultiIndex>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(MultiIndex::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first);
            fill(prefix, remaining - first, slots - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d1 == 0 {
        return out;
    }
    fill(&mut Vec::with_capacity(d1), k, d1, &mut out);
    out
}

/// `|{ν ∈ ℕ^{d₁} : |ν|₁ = k}| = C(k + d₁ − 1, d₁ − 1)`.
pub fn eigenspace_dim(k: usize, d1: usize) -> u64 {
    assert!(d1 > 0, "d1 must be positive");
    let n = (k + d1 - 1) as u128;
    let r = (d1 - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc as u64
}

/// `h_ℓ(u)`, the L²-normalized Hermite function.
pub fn hermite_1d(l: usize, u: f64) -> f64 {
    let gauss_log = -0.5 * u * u;
    let mut log_scale = 0.0;
    let mut prev = 0.0;
    let mut cur = pi_quarter();
    for j in 0..l {
        let next = u * (2.0 / (j + 1) as f64).sqrt() * cur - (j as f64 / (j + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    scaled_value(cur, gauss_log + log_scale)
}

/// `[h_0(u), …, h_n(u)]`.
pub fn hermite_all(n: usize, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let gauss_log = -0.5 * u * u;
    let mut log_scale = 0.0;
    let mut prev = 0.0;
    let mut cur = pi_quarter();
    out.push(scaled_value(cur, gauss_log));
    for j in 0..n {
        let next = u * (2.0 / (j + 1) as f64).sqrt() * cur - (j as f64 / (j + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out.push(scaled_value(cur, gauss_log + log_scale));
    }
    out
}

fn scaled_value(mantissa: f64, log_factor: f64) -> f64 {
    if mantissa == 0.0 {
        return 0.0;
    }
    mantissa.signum() * (mantissa.abs().ln() + log_factor).exp()
}

/// `Φ_ν^η(x) = |η|^{d₁/4} Φ_ν(|η|^{1/2} x)` with `|η| = r`.
pub fn scaled_hermite(nu: &MultiIndex, r: f64, x: &[f64]) -> Result<f64> {
    ensure_positive("r", r)?;
    if x.len() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: nu.dim(), got: x.len() });
    }
    let sr = r.sqrt();
    let prod: f64 = nu.entries().iter().zip(x).map(|(&l, &xj)| hermite_1d(l, sr * xj)).product();
    Ok(r.powf(nu.dim() as f64 / 4.0) * prod)
}

/// Values `K_k^r(x, a)` for every `k ≤ k_max`, computed by summing the
/// per-axis products `h_m(√r x_j) h_m(√r a_j)` over all compositions of `k`.
pub fn projection_kernels(k_max: usize, r: f64, x: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    ensure_positive("r", r)?;
    if x.len() != a.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: a.len() });
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("points must have positive dimension".into()));
    }
    let sr = r.sqrt();
    let seqs: Vec<Vec<f64>> = x
        .iter()
        .zip(a)
        .map(|(&xj, &aj)| {
            let hx = hermite_all(k_max, sr * xj);
            if xj == aj {
                hx.iter().map(|v| v * v).collect()
            } else {
                let ha = hermite_all(k_max, sr * aj);
                hx.iter().zip(&ha).map(|(p, q)| p * q).collect()
            }
        })
        .collect();
    let scale = r.powf(x.len() as f64 / 2.0);
    Ok(tensor::composition_sums(&seqs, k_max + 1).into_iter().map(|v| v * scale).collect())
}

/// `K_k^η(x, a) = Σ_{|ν|₁=k} Φ_ν^η(x) Φ_ν^η(a)` with `|η| = r`.
pub fn projection_kernel(k: EigenIndex, r: f64, x: &[f64], a: &[f64]) -> Result<f64> {
    if x.len() != k.d1 {
        return Err(Error::DimensionMismatch { expected: k.d1, got: x.len() });
    }
    Ok(projection_kernels(k.k, r, x, a)?[k.k])
}

/// `H_k^η(x) = K_k^η(x, x)`.
pub fn diag_kernel(k: EigenIndex, r: f64, x: &[f64]) -> Result<f64> {
    projection_kernel(k, r, x, x)
}

/// `H_k^r(x)` for all `k ≤ k_max`.
pub fn diag_kernels(k_max: usize, r: f64, x: &[f64]) -> Result<Vec<f64>> {
    projection_kernels(k_max, r, x, x)
}

/// Eigenspace projection `P_k^η g = Σ_{|ν|₁=k} (g, Φ_ν^η) Φ_ν^η` of a function
/// sampled on the tensor grid of `plan`, with inner products taken under the
/// plan's trapezoid quadrature.
pub fn project(k: EigenIndex, r: f64, g: &[Complex64], plan: &HermiteEvalPlan) -> Result<Vec<Complex64>> {
    ensure_positive("r", r)?;
    if plan.d1() != k.d1 {
        return Err(Error::DimensionMismatch { expected: plan.d1(), got: k.d1 });
    }
    if g.is_empty() || plan.grid_len() == 0 {
        return Err(Error::EmptyGrid);
    }
    if g.len() != plan.grid_len() {
        return Err(Error::DimensionMismatch { expected: plan.grid_len(), got: g.len() });
    }
    let basis = ScaledBasis1D::new(k.k, r, plan.points());
    let coeffs = basis.analyze(g, k.d1, plan.weight());
    let kk = k.k;
    let masked = basis::mask_coefficients(&coeffs, k.d1, kk + 1, |nu_len| if nu_len == kk { 1.0 } else { 0.0 });
    Ok(basis.synthesize(&masked, k.d1))
}
