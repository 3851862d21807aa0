//! Weighted kernel integrals `∫∫ |y − b|^{2N} |K_{G(L,T)}((x,y),(a,b))|² dx dy`.
//!
//! With `k̂(x, η) = Σ_ν G([ν]|η|, |η|) Φ_ν^{|η|}(x) Φ_ν^{|η|}(a)` the `y`-Fourier
//! transform of the kernel column, the weight becomes `N` derivatives in `η`.
//! For radial `k̂` each derivative acts on the Hermite coefficients `c` as
//! `c ↦ ∂_r c + r^{-1} D c`, where `D` is the generator of the dilations
//! `Φ_ν^r`: on each axis `∂_r Φ_m^r = (4r)^{-1}(√(m(m−1)) Φ_{m−2}^r − √((m+1)(m+2)) Φ_{m+2}^r)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::report::{Criterion, ExperimentReport, SeriesPoint};
use super::restriction::{check_support, symbol_l2_norm};
use super::spectral::{radial_integral, radial_prefactor, radial_window, RadialRule};
use crate::calculus::{apply_joint, band_truncate, sobolev_norm, ApplyOptions, DyadicBump, FineGrid1D, GridFunction, GridSpec, JointSymbol, Symbol1D};
use crate::error::{Error, Result};
use crate::geometry::CCPoint;
use crate::hermite::{bracket, hermite_all, multi_indices};

/// Hermite coefficients of `∂_η^N k̂` along a ray, on all multi-indices up to a fixed length.
struct CoefficientFlow<'a> {
    g: &'a JointSymbol,
    d1: usize,
    a: Vec<f64>,
    indices: Vec<Vec<usize>>,
    lengths: Vec<usize>,
    /// `(row, col, weight)` entries of `D`.
    generator: Vec<(usize, usize, f64)>,
    top: usize,
}

impl<'a> CoefficientFlow<'a> {
    fn new(g: &'a JointSymbol, d1: usize, a: &[f64], top: usize) -> Self {
        let mut indices = Vec::new();
        let mut lengths = Vec::new();
        for k in 0..=top {
            for nu in multi_indices(d1, k) {
                indices.push(nu.entries().to_vec());
                lengths.push(k);
            }
        }
        let position: HashMap<&[usize], usize> = indices.iter().enumerate().map(|(i, v)| (v.as_slice(), i)).collect();
        let mut generator = Vec::new();
        for (row, mu) in indices.iter().enumerate() {
            for axis in 0..d1 {
                let m = mu[axis] as f64;
                let mut up = mu.clone();
                up[axis] += 2;
                if let Some(&col) = position.get(up.as_slice()) {
                    generator.push((row, col, 0.25 * ((m + 1.0) * (m + 2.0)).sqrt()));
                }
                if mu[axis] >= 2 {
                    let mut down = mu.clone();
                    down[axis] -= 2;
                    generator.push((row, position[down.as_slice()], -0.25 * (m * (m - 1.0)).sqrt()));
                }
            }
        }
        Self { g, d1, a: a.to_vec(), indices, lengths, generator, top }
    }

    fn base(&self, r: f64) -> Vec<Complex64> {
        let sr = r.sqrt();
        let axes: Vec<Vec<f64>> = self.a.iter().map(|&ai| hermite_all(self.top, sr * ai).iter().map(|v| v * r.powf(0.25)).collect()).collect();
        let weights: Vec<Complex64> = (0..=self.top).map(|k| self.g.eval(bracket(k, self.d1) * r, r)).collect();
        self.indices
            .iter()
            .zip(&self.lengths)
            .map(|(nu, &k)| weights[k] * nu.iter().zip(&axes).map(|(&m, ax)| ax[m]).product::<f64>())
            .collect()
    }

    /// `c^{(n)}(r)`, with `∂_r` by the five-point stencil of relative step `1e-3`.
    fn coefficients(&self, n: usize, r: f64) -> Vec<Complex64> {
        if n == 0 {
            return self.base(r);
        }
        let h = 1e-3 * r;
        let stencil = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
        let mut out = vec![Complex64::new(0.0, 0.0); self.indices.len()];
        for (s, w) in stencil {
            for (o, v) in out.iter_mut().zip(self.coefficients(n - 1, r + s * h)) {
                *o += v * (w / (12.0 * h));
            }
        }
        let prev = self.coefficients(n - 1, r);
        for &(row, col, w) in &self.generator {
            out[row] += prev[col] * (w / r);
        }
        out
    }

    fn energy(&self, n: usize, r: f64) -> f64 {
        self.coefficients(n, r).iter().map(|c| c.norm_sqr()).sum()
    }
}

fn check_order(order: usize, d2: usize) -> Result<()> {
    if d2 > 1 && order > 1 {
        return Err(Error::Unsupported(format!("weight order {order} with d2 = {d2}; only N ≤ 1 is implemented for d2 > 1")));
    }
    Ok(())
}

fn flow_top(g: &JointSymbol, d1: usize, order: usize) -> Result<usize> {
    let w_hi = g.bracket_window().map(|w| w.1).filter(|w| w.is_finite()).ok_or_else(|| {
        Error::Unsupported(format!("symbol {} needs a bounded window of eigenspace indices", g.name()))
    })?;
    Ok(((w_hi - d1 as f64) / 2.0).floor().max(0.0) as usize + 2 * order)
}

/// `∫∫ |y − b|^{2N} |K_{G(L,T)}((x,y),(a,b))|² dx dy` for a symbol with a bounded
/// bracket window, by radial quadrature.
pub fn weighted_kernel_energy(g: &JointSymbol, d1: usize, d2: usize, order: usize, a: &[f64], rule: &RadialRule) -> Result<f64> {
    check_order(order, d2)?;
    if a.len() != d1 {
        return Err(Error::DimensionMismatch { expected: d1, got: a.len() });
    }
    let flow = CoefficientFlow::new(g, d1, a, flow_top(g, d1, order)?);
    let window = radial_window(g, d1, usize::MAX / 4)?;
    let v = radial_integral(window, d2, rule, |r| r.powi(d2 as i32 - 1) * flow.energy(order, r))?;
    Ok(radial_prefactor(d2) * v.value)
}

/// The same integral with `η` restricted to the frequency lattice of `spec`,
/// i.e. the quantity a grid computation on `spec` approximates.
pub fn weighted_kernel_energy_lattice(g: &JointSymbol, spec: &GridSpec, order: usize, a: &[f64]) -> Result<f64> {
    check_order(order, spec.d2)?;
    if spec.d2 != 1 {
        return Err(Error::Unsupported("lattice sums are implemented for d2 = 1".into()));
    }
    let flow = CoefficientFlow::new(g, spec.d1, a, flow_top(g, spec.d1, order)?);
    let scale = spec.d_eta() / (2.0 * std::f64::consts::PI);
    Ok((0..spec.n_y)
        .map(|m| spec.eta_of_bin(m).abs())
        .filter(|&r| r > 0.0)
        .map(|r| flow.energy(order, r))
        .sum::<f64>()
        * scale)
}

/// Grid version: applies `G(L,T)` to a normalized delta at grid point `index`
/// and integrates `|y − b|^{2N}|K|²` with the minimal periodic image of `y − b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridKernelEnergy {
    pub value: f64,
    /// Share of the weighted integral carried by the outer tenth of the box.
    pub edge_fraction: f64,
    /// Relative truncation tail reported by the joint calculus.
    pub relative_tail: f64,
}

pub fn weighted_kernel_energy_grid(g: &JointSymbol, spec: GridSpec, order: usize, index: usize, opts: &ApplyOptions) -> Result<GridKernelEnergy> {
    if index >= spec.len() {
        return Err(Error::InvalidArgument(format!("grid index {index} out of range")));
    }
    let mut delta = GridFunction::zeros(spec);
    delta.values[index] = Complex64::new(1.0 / spec.cell_volume(), 0.0);
    let applied = apply_joint(g, &delta, opts)?;
    let (mut a, mut b) = (vec![0.0; spec.d1], vec![0.0; spec.d2]);
    spec.coordinates(index, &mut a, &mut b);
    let (mut x, mut y) = (vec![0.0; spec.d1], vec![0.0; spec.d2]);
    let period = 2.0 * spec.y_extent;
    let (mut total, mut edge) = (0.0, 0.0);
    for (i, v) in applied.function.values.iter().enumerate() {
        spec.coordinates(i, &mut x, &mut y);
        let dy2: f64 = y.iter().zip(&b).map(|(p, q)| {
            let d = (p - q).rem_euclid(period);
            d.min(period - d).powi(2)
        }).sum();
        let w = dy2.powi(order as i32) * v.norm_sqr();
        total += w;
        let near_x = x.iter().any(|c| c.abs() > 0.9 * spec.x_extent);
        if near_x || dy2.sqrt() > 0.8 * spec.y_extent {
            edge += w;
        }
    }
    let value = total * spec.cell_volume();
    Ok(GridKernelEnergy { value, edge_fraction: if total > 0.0 { edge / total } else { 0.0 }, relative_tail: applied.report.relative_tail })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlancherelOptions {
    pub rule: RadialRule,
    pub tolerance: f64,
    /// Also assemble each column on this grid, at the sample nearest the center.
    pub grid: Option<GridSpec>,
}

impl Default for PlancherelOptions {
    fn default() -> Self {
        Self { rule: RadialRule { panels: 64, nodes: 12, max_order: 1500 }, tolerance: 0.3, grid: None }
    }
}

/// `∫∫ |y − b|^{2N} |K_{H_ℓ(L,T)}|²` over `levels`, against the predicted exponent
/// `2N − d₂` in `2^ℓ`.
pub fn weighted_plancherel(h: &Symbol1D, levels: &[i32], order: usize, center: &CCPoint, opts: &PlancherelOptions) -> Result<ExperimentReport> {
    check_support(h, 0.125, 8.0)?;
    let (d1, d2) = center.dims();
    check_order(order, d2)?;
    let bump = DyadicBump::new();
    let mut r = ExperimentReport::new("weighted-plancherel");
    r.input("symbol", h.name());
    r.input("support", h.support());
    r.input("levels", levels);
    r.input("order", order);
    r.input("center", center);
    r.input("options", opts);
    r.input("symbol_l2_norm", symbol_l2_norm(h));
    let grid1d = FineGrid1D::around(h.support(), FineGrid1D::DEFAULT_LEN)?;
    r.input("symbol_sobolev_norm", sobolev_norm(h, order as f64, &grid1d)?);
    let predicted = 2.0 * order as f64 - d2 as f64;
    r.input("predicted_exponent", predicted);
    let grid_index = opts.grid.map(|spec| nearest_index(&spec, center)).transpose()?;
    for &l in levels {
        let g = band_truncate(h, l, bump);
        let v = weighted_kernel_energy(&g, d1, d2, order, &center.x, &opts.rule)?;
        let mut point = SeriesPoint::new("energy", 2f64.powi(l), v).with("level", l as f64);
        if let (Some(spec), Some(index)) = (opts.grid, grid_index) {
            let ge = weighted_kernel_energy_grid(&g, spec, order, index, &ApplyOptions { tail_tolerance: None, ..ApplyOptions::default() })?;
            if ge.edge_fraction > 0.01 {
                r.flag(format!("level {l}: {:.2}% of the weighted integral sits at the grid edge", 100.0 * ge.edge_fraction));
            }
            point = point.with("grid_value", ge.value).with("grid_edge_fraction", ge.edge_fraction).with("grid_relative_tail", ge.relative_tail);
        }
        r.push(point);
    }
    if r.series.iter().all(|p| p.value == 0.0) {
        r.flag("all energies vanish");
        r.judge(Criterion::None);
        return Ok(r);
    }
    if levels.len() >= 2 {
        r.fit_group("energy")?;
    }
    if levels.len() < 4 {
        r.flag(format!("exponent fitted over {} points, fewer than 4", levels.len()));
    }
    r.judge(Criterion::SlopeWithin { predicted, tolerance: opts.tolerance });
    Ok(r)
}

fn nearest_index(spec: &GridSpec, z: &CCPoint) -> Result<usize> {
    let (d1, d2) = z.dims();
    if (d1, d2) != (spec.d1, spec.d2) {
        return Err(Error::DimensionMismatch { expected: spec.d1 + spec.d2, got: d1 + d2 });
    }
    let snap = |v: f64, ext: f64, n: usize| (((v + ext) / (2.0 * ext / n as f64)).round() as i64).rem_euclid(n as i64) as usize;
    let mut idx = 0;
    for &v in &z.x {
        idx = idx * spec.n_x + snap(v, spec.x_extent, spec.n_x);
    }
    for &v in &z.y {
        idx = idx * spec.n_y + snap(v, spec.y_extent, spec.n_y);
    }
    Ok(idx)
}
