use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::fourier::{fft_axis, fourier_y, inverse_fourier_y, YSpectrum};
use super::grid::{GridFunction, GridSpec};
use super::symbol::{cosine_symbol, JointSymbol, Symbol1D};
use crate::error::{Error, Result};
use crate::hermite::{bracket, ScaledBasis1D};
use crate::tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApplyOptions {
    /// A Hermite order `K` counts as resolved on the `x` grid when the sampled
    /// 1-D Gram matrix of modes `0..=K` is within this of the identity.
    pub gram_tolerance: f64,
    /// Fail when the relative truncation tail that the symbol can see exceeds this.
    pub tail_tolerance: Option<f64>,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        Self { gram_tolerance: 1e-10, tail_tolerance: None }
    }
}

/// Truncation diagnostics for one `y` frequency plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneTail {
    pub eta_norm: f64,
    /// Highest resolved eigenspace index, `None` when not even the ground state is.
    pub resolved_order: Option<usize>,
    /// `‖f^η‖₂` on the `x` grid.
    pub energy: f64,
    /// `‖f^η − Σ_{k≤K} P_k^η f^η‖₂`.
    pub tail: f64,
    /// Whether the symbol can be nonzero on the discarded modes.
    pub relevant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub planes: Vec<PlaneTail>,
    /// `(Σ relevant tail²)^{1/2} / ‖f‖₂`.
    pub relative_tail: f64,
}

#[derive(Debug, Clone)]
pub struct Applied {
    pub function: GridFunction,
    pub report: TruncationReport,
}

/// Hermite data for all planes sharing one value of `|η|`.
struct PlaneBasis {
    r: f64,
    basis: ScaledBasis1D,
    resolved: Option<usize>,
}

/// Distinct values of `Σ m_i²` over the signed `y` bins, keyed to the planes using them.
fn planes_by_radius(spec: &GridSpec) -> (Vec<u64>, BTreeMap<u64, ()>) {
    let mut idx = vec![0; spec.d2];
    let keys: Vec<u64> = (0..spec.y_len())
        .map(|m| {
            tensor::unravel(m, &spec.y_shape(), &mut idx);
            idx.iter().map(|&i| spec.signed_bin(i).pow(2) as u64).sum()
        })
        .collect();
    let distinct = keys.iter().map(|&k| (k, ())).collect();
    (keys, distinct)
}

fn plane_bases(spec: &GridSpec, opts: &ApplyOptions) -> (Vec<u64>, BTreeMap<u64, PlaneBasis>) {
    let (keys, distinct) = planes_by_radius(spec);
    let xs = spec.x_points();
    let dx = spec.dx();
    let bases: BTreeMap<u64, PlaneBasis> = distinct
        .into_keys()
        .filter(|&k| k > 0)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| {
            let r = spec.d_eta() * (k as f64).sqrt();
            let basis = ScaledBasis1D::new(spec.k_max, r, &xs);
            let resolved = basis.resolved_order(dx, opts.gram_tolerance);
            (k, PlaneBasis { r, basis, resolved })
        })
        .collect();
    (keys, bases)
}

fn weighted_norm(v: &[Complex64], weight: f64) -> f64 {
    (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * weight).sqrt()
}

/// Multiplies coefficient `c_ν` of a `[0, m1)^{d₁}` tensor by `factors[|ν|₁]`
/// (zero beyond the end of `factors`).
fn scale_by_order(coeffs: &[Complex64], d1: usize, m1: usize, factors: &[Complex64]) -> Vec<Complex64> {
    let shape = vec![m1; d1];
    let mut idx = vec![0; d1];
    coeffs
        .iter()
        .enumerate()
        .map(|(flat, c)| {
            tensor::unravel(flat, &shape, &mut idx);
            let k: usize = idx.iter().sum();
            factors.get(k).map_or(Complex64::new(0.0, 0.0), |f| c * f)
        })
        .collect()
}

/// Sums `|c_ν|²` over each eigenspace `|ν|₁ = k ≤ k_max`.
fn order_energies(coeffs: &[Complex64], d1: usize, m1: usize, k_max: usize) -> Vec<f64> {
    let shape = vec![m1; d1];
    let mut idx = vec![0; d1];
    let mut out = vec![0.0; k_max + 1];
    for (flat, c) in coeffs.iter().enumerate() {
        tensor::unravel(flat, &shape, &mut idx);
        let k: usize = idx.iter().sum();
        if k <= k_max {
            out[k] += c.norm_sqr();
        }
    }
    out
}

/// The `η = 0` plane: `G(|ξ|², 0)` as a periodic Fourier multiplier in `x`.
fn zero_plane(g: &JointSymbol, spec: &GridSpec, plane: &[Complex64]) -> Vec<Complex64> {
    if g.vanishes_at_zero() {
        return vec![Complex64::new(0.0, 0.0); plane.len()];
    }
    let shape = spec.x_shape();
    let mut data = plane.to_vec();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(spec.n_x);
    let inv = planner.plan_fft_inverse(spec.n_x);
    for axis in 0..spec.d1 {
        fft_axis(&mut data, &shape, axis, &fwd);
    }
    let xi_step = std::f64::consts::PI / spec.x_extent;
    let signed = |i: usize| -> f64 {
        let n = spec.n_x as i64;
        let i = i as i64;
        (if 2 * i < n { i } else { i - n }) as f64 * xi_step
    };
    let mut idx = vec![0; spec.d1];
    let norm = 1.0 / spec.x_len() as f64;
    for (flat, v) in data.iter_mut().enumerate() {
        tensor::unravel(flat, &shape, &mut idx);
        let xi2: f64 = idx.iter().map(|&i| signed(i).powi(2)).sum();
        *v *= g.eval(xi2, 0.0) * norm;
    }
    for axis in 0..spec.d1 {
        fft_axis(&mut data, &shape, axis, &inv);
    }
    data
}

/// Applies `G(L, T)` to a function given by its `y` transform.
pub fn apply_joint_spectrum(g: &JointSymbol, s: &YSpectrum, opts: &ApplyOptions) -> Result<(YSpectrum, TruncationReport)> {
    let spec = s.spec;
    if spec.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (keys, bases) = plane_bases(&spec, opts);
    let d1 = spec.d1;
    let m1 = spec.k_max + 1;
    let w = spec.dx().powi(d1 as i32);
    let lambda_sup = g.lambda_support().1;
    let bracket_sup = g.bracket_window().map_or(f64::INFINITY, |w| w.1);
    let planes: Vec<(Vec<Complex64>, PlaneTail)> = (0..spec.y_len())
        .into_par_iter()
        .map(|m| {
            let plane = s.plane(m);
            let energy = weighted_norm(&plane, w);
            let key = keys[m];
            let Some(pb) = bases.get(&key) else {
                let out = zero_plane(g, &spec, &plane);
                return (out, PlaneTail { eta_norm: 0.0, resolved_order: None, energy, tail: 0.0, relevant: false });
            };
            let first_missing = pb.resolved.map_or(0, |k| k + 1);
            let b = bracket(first_missing, d1);
            let relevant = b * pb.r <= lambda_sup && b <= bracket_sup;
            let Some(order) = pb.resolved else {
                let zeros = vec![Complex64::new(0.0, 0.0); plane.len()];
                return (zeros, PlaneTail { eta_norm: pb.r, resolved_order: None, energy, tail: energy, relevant });
            };
            let coeffs = pb.basis.analyze(&plane, d1, spec.dx());
            let factors: Vec<Complex64> = (0..=order).map(|k| g.eval(bracket(k, d1) * pb.r, pb.r)).collect();
            let out = pb.basis.synthesize(&scale_by_order(&coeffs, d1, m1, &factors), d1);
            let ones = vec![Complex64::new(1.0, 0.0); order + 1];
            let proj = pb.basis.synthesize(&scale_by_order(&coeffs, d1, m1, &ones), d1);
            let resid: Vec<Complex64> = plane.iter().zip(&proj).map(|(a, b)| a - b).collect();
            let tail = weighted_norm(&resid, w);
            (out, PlaneTail { eta_norm: pb.r, resolved_order: Some(order), energy, tail, relevant })
        })
        .collect();
    let ny = spec.y_len();
    let mut values = vec![Complex64::new(0.0, 0.0); spec.len()];
    let mut tails = Vec::with_capacity(ny);
    for (m, (out, tail)) in planes.into_iter().enumerate() {
        for (i, v) in out.into_iter().enumerate() {
            values[i * ny + m] = v;
        }
        tails.push(tail);
    }
    let total: f64 = tails.iter().map(|t| t.energy * t.energy).sum();
    let seen: f64 = tails.iter().filter(|t| t.relevant).map(|t| t.tail * t.tail).sum();
    let relative_tail = if total > 0.0 { (seen / total).sqrt() } else { 0.0 };
    if let Some(tol) = opts.tail_tolerance {
        if relative_tail > tol {
            return Err(Error::TruncationTail { tail: relative_tail, tolerance: tol });
        }
    }
    Ok((YSpectrum { spec, values }, TruncationReport { planes: tails, relative_tail }))
}

/// `G(L, T) f`: per `y` frequency `η ≠ 0`, `G(L^η, |η|)` through the scaled
/// Hermite expansion; the `η = 0` plane carries `G(−Δ_x, 0)`.
pub fn apply_joint(g: &JointSymbol, f: &GridFunction, opts: &ApplyOptions) -> Result<Applied> {
    let (s, report) = apply_joint_spectrum(g, &fourier_y(f), opts)?;
    Ok(Applied { function: inverse_fourier_y(&s), report })
}

/// `F(√L) f`.
pub fn apply_multiplier(f_sym: &Symbol1D, f: &GridFunction, opts: &ApplyOptions) -> Result<Applied> {
    apply_joint(&JointSymbol::from_multiplier(f_sym), f, opts)
}

/// `cos(t√L) f`.
pub fn cosine_propagate(t: f64, f: &GridFunction, opts: &ApplyOptions) -> Result<Applied> {
    apply_multiplier(&cosine_symbol(t), f, opts)
}

/// `L f` through the spectral calculus.
pub fn apply_l(f: &GridFunction, opts: &ApplyOptions) -> Result<Applied> {
    apply_joint(&JointSymbol::identity_lambda(), f, opts)
}

/// `(−Δ_x − |x|²Δ_y) f` by fourth-order central differences: zero extension in `x`,
/// periodic in `y`.
pub fn apply_l_fd(f: &GridFunction) -> GridFunction {
    let spec = f.spec;
    let shape = spec.shape();
    let d = spec.d1 + spec.d2;
    let strides: Vec<usize> = (0..d).map(|a| shape[a + 1..].iter().product()).collect();
    let (hx2, hy2) = (spec.dx().powi(2), spec.dy().powi(2));
    let mut x = vec![0.0; spec.d1];
    let mut y = vec![0.0; spec.d2];
    let values = (0..spec.len())
        .into_par_iter()
        .map_with((vec![0; d], x.clone(), y.clone()), |(idx, x, y), flat| {
            tensor::unravel(flat, &shape, idx);
            spec.coordinates(flat, x, y);
            let v = f.values[flat];
            let second = |axis: usize, periodic: bool| -> Complex64 {
                let n = shape[axis] as isize;
                let at = |off: isize| -> Complex64 {
                    let mut i = idx[axis] as isize + off;
                    if periodic {
                        i = i.rem_euclid(n);
                    } else if i < 0 || i >= n {
                        return Complex64::new(0.0, 0.0);
                    }
                    f.values[(flat as isize + (i - idx[axis] as isize) * strides[axis] as isize) as usize]
                };
                -at(-2) + at(-1) * 16.0 - v * 30.0 + at(1) * 16.0 - at(2)
            };
            let mut lap_x = Complex64::new(0.0, 0.0);
            for axis in 0..spec.d1 {
                lap_x += second(axis, false) / (12.0 * hx2);
            }
            let mut lap_y = Complex64::new(0.0, 0.0);
            for axis in spec.d1..d {
                lap_y += second(axis, true) / (12.0 * hy2);
            }
            let r2: f64 = x.iter().map(|t| t * t).sum();
            -lap_x - lap_y * r2
        })
        .collect();
    x.clear();
    y.clear();
    GridFunction { spec, values }
}

/// Energies `‖P_k^η f^η‖₂²` for each frequency plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneEnergies {
    pub eta_norm: f64,
    pub resolved_order: Option<usize>,
    pub energies: Vec<f64>,
}

/// Eigenspace energy decomposition of every `η ≠ 0` plane of `s`, truncated at
/// the resolved order. The `η = 0` plane is reported with no energies.
pub fn eigen_energies(s: &YSpectrum, opts: &ApplyOptions) -> Vec<PlaneEnergies> {
    let spec = s.spec;
    let (keys, bases) = plane_bases(&spec, opts);
    (0..spec.y_len())
        .into_par_iter()
        .map(|m| match bases.get(&keys[m]) {
            None => PlaneEnergies { eta_norm: 0.0, resolved_order: None, energies: Vec::new() },
            Some(pb) => {
                let Some(order) = pb.resolved else {
                    return PlaneEnergies { eta_norm: pb.r, resolved_order: None, energies: Vec::new() };
                };
                let coeffs = pb.basis.analyze(&s.plane(m), spec.d1, spec.dx());
                PlaneEnergies {
                    eta_norm: pb.r,
                    resolved_order: Some(order),
                    energies: order_energies(&coeffs, spec.d1, spec.k_max + 1, order),
                }
            }
        })
        .collect()
}
