//! Semi-analytic evaluation of kernel integrals of joint multipliers.
//!
//! For `G(L, T)` with kernel `K`, Plancherel in `y` and the Hermite expansion in
//! `x` give
//!
//! `∫|K((x,y),(a,b))|² dx dy = (2π)^{-d₂} |S^{d₂-1}| ∫₀^∞ r^{d₂-1} Σ_k |G([k]r, r)|² H_k^r(a) dr`,
//!
//! which only involves diagonal projection kernels. The `r` integral uses
//! composite Gauss–Legendre panels in `ln r`.

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::calculus::JointSymbol;
use crate::error::{Error, Result};
use crate::hermite::{bracket, diag_kernels, hermite_all};
use crate::tensor;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadialRule {
    pub panels: usize,
    pub nodes: usize,
    /// Largest eigenspace index summed; `r` below the point where it would be
    /// exceeded is covered by a power-law tail estimate.
    pub max_order: usize,
}

impl Default for RadialRule {
    fn default() -> Self {
        Self { panels: 64, nodes: 12, max_order: 1500 }
    }
}

/// A radial integral together with the part contributed by the tail estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectralValue {
    pub value: f64,
    pub tail: f64,
}

/// `|S^{n-1}|`, the area of the unit sphere in ℝⁿ.
pub fn sphere_area(n: usize) -> f64 {
    // Γ(n/2) by recursion from Γ(1/2) and Γ(1).
    let mut gamma = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut s = if n % 2 == 0 { 1.0 } else { 0.5 };
    while s + 0.5 < n as f64 / 2.0 {
        gamma *= s;
        s += 1.0;
    }
    2.0 * PI.powf(n as f64 / 2.0) / gamma
}

/// `(2π)^{-d₂} |S^{d₂-1}|`.
pub(crate) fn radial_prefactor(d2: usize) -> f64 {
    sphere_area(d2) / (2.0 * PI).powi(d2 as i32)
}

/// `r`-interval carrying the symbol, and whether the lower end was cut by `max_order`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RadialWindow {
    pub lo: f64,
    pub hi: f64,
    pub truncated: bool,
}

pub(crate) fn radial_window(g: &JointSymbol, d1: usize, max_order: usize) -> Result<RadialWindow> {
    let (l_lo, l_hi) = g.lambda_support();
    if !l_hi.is_finite() || l_hi <= 0.0 {
        return Err(Error::Unsupported(format!("symbol {} needs a bounded positive λ-support", g.name())));
    }
    let (w_lo, w_hi) = g.bracket_window().unwrap_or((d1 as f64, f64::INFINITY));
    let w_lo = w_lo.max(d1 as f64);
    let hi = l_hi / w_lo;
    let exact_lo = if l_lo > 0.0 && w_hi.is_finite() { l_lo / w_hi } else { 0.0 };
    let floor = l_hi / bracket(max_order, d1);
    let lo = exact_lo.max(floor);
    if lo >= hi {
        return Err(Error::InvalidArgument(format!("empty radial window [{lo}, {hi}] for {}", g.name())));
    }
    Ok(RadialWindow { lo, hi, truncated: exact_lo < floor })
}

/// Nodes and weights for `∫_lo^hi · dr`, uniform panels in `ln r`.
pub(crate) fn radial_nodes(lo: f64, hi: f64, rule: &RadialRule) -> Result<Vec<(f64, f64)>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("bad radial interval [{lo}, {hi}]")));
    }
    let gl = GaussLegendre::new(rule.nodes.max(2)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (u0, u1) = (lo.ln(), hi.ln());
    let panels = rule.panels.max(1);
    let h = (u1 - u0) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.nodes);
    for p in 0..panels {
        let mid = u0 + (p as f64 + 0.5) * h;
        for &(x, w) in gl.as_node_weight_pairs() {
            let r = (mid + 0.5 * h * x).exp();
            out.push((r, 0.5 * h * w * r));
        }
    }
    Ok(out)
}

/// Integrates `integrand` over the window; a truncated lower end adds
/// `I(lo)·lo/d₂`, exact when `I(r) ∝ r^{d₂-1}` near 0.
pub(crate) fn radial_integral(window: RadialWindow, d2: usize, rule: &RadialRule, integrand: impl Fn(f64) -> f64 + Sync) -> Result<SpectralValue> {
    let nodes = radial_nodes(window.lo, window.hi, rule)?;
    let terms: Vec<f64> = nodes.par_iter().map(|&(r, w)| w * integrand(r)).collect();
    // summed in order so results do not depend on the thread count
    let body: f64 = terms.iter().sum();
    let tail = if window.truncated { integrand(window.lo) * window.lo / d2 as f64 } else { 0.0 };
    Ok(SpectralValue { value: body + tail, tail })
}

/// Largest `k` with `[k]·r` inside the λ-support, capped by `max_order`.
pub(crate) fn top_order(g: &JointSymbol, d1: usize, r: f64, max_order: usize) -> Option<usize> {
    let l_hi = g.lambda_support().1;
    let w_hi = g.bracket_window().map_or(f64::INFINITY, |w| w.1);
    let top = ((l_hi / r).min(w_hi) - d1 as f64) / 2.0;
    if top < 0.0 { None } else { Some((top.floor() as usize).min(max_order)) }
}

/// `|G([k]r, r)|²` for `k ≤ top`.
pub(crate) fn eigen_weights(g: &JointSymbol, d1: usize, r: f64, top: usize) -> Vec<f64> {
    (0..=top).map(|k| g.eval(bracket(k, d1) * r, r).norm_sqr()).collect()
}

fn ray_point(d1: usize, a_norm: f64) -> Vec<f64> {
    let mut a = vec![0.0; d1];
    a[0] = a_norm;
    a
}

/// `∫|K_{G(L,T)}(·, (a,b))|²`, depending only on `|a|`.
pub fn kernel_column_energy(g: &JointSymbol, d1: usize, d2: usize, a_norm: f64, rule: &RadialRule) -> Result<SpectralValue> {
    check_dims(d1, d2)?;
    let window = radial_window(g, d1, rule.max_order)?;
    let a = ray_point(d1, a_norm);
    let v = radial_integral(window, d2, rule, |r| {
        let Some(top) = top_order(g, d1, r, rule.max_order) else { return 0.0 };
        let w = eigen_weights(g, d1, r, top);
        let h = diag_kernels(top, r, &a).expect("valid point");
        r.powi(d2 as i32 - 1) * w.iter().zip(&h).map(|(p, q)| p * q).sum::<f64>()
    })?;
    let c = radial_prefactor(d2);
    Ok(SpectralValue { value: c * v.value, tail: c * v.tail })
}

/// Supremum of the kernel column norm over `|a| ∈ [lo, hi]`: a geometric scan
/// followed by golden-section refinement around the best sample. Returns
/// `(|a|, norm)`.
pub fn kernel_column_sup(g: &JointSymbol, d1: usize, d2: usize, lo: f64, hi: f64, rule: &RadialRule) -> Result<(f64, f64)> {
    if !(lo >= 0.0 && hi >= lo) {
        return Err(Error::InvalidArgument(format!("bad |a| range [{lo}, {hi}]")));
    }
    let eval = |a: f64| kernel_column_energy(g, d1, d2, a, rule).map(|v| v.value.max(0.0).sqrt());
    // `lo` followed by offsets `(hi - lo)·2^{-12 + i/2}`.
    let n = if hi > lo { 25 } else { 0 };
    let samples: Vec<f64> = (0..=n).map(|i| if i == 0 { lo } else { lo + (hi - lo) * (0.5 * (i as f64 - 1.0) - 12.0).exp2() }).collect();
    let values = samples.iter().map(|&a| eval(a)).collect::<Result<Vec<_>>>()?;
    let (mut best_i, mut best) = (0, values[0]);
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best_i = i;
            best = v;
        }
    }
    let mut best_a = samples[best_i];
    if n > 0 {
        let (mut a, mut b) = (samples[best_i.saturating_sub(1)], samples[(best_i + 1).min(n)]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..30 {
            let (c, d) = (b - phi * (b - a), a + phi * (b - a));
            let (fc, fd) = (eval(c)?, eval(d)?);
            for (x, fx) in [(c, fc), (d, fd)] {
                if fx > best {
                    best = fx;
                    best_a = x;
                }
            }
            if fc >= fd { b = d } else { a = c }
        }
    }
    Ok((best_a, best))
}

/// `sup |G([k]r, r)|` over the joint spectrum, scanning `λ` for each admissible `k`.
pub fn spectral_sup(g: &JointSymbol, d1: usize, max_order: usize, samples: usize) -> Result<f64> {
    let (l_lo, l_hi) = g.lambda_support();
    if !l_hi.is_finite() {
        return Err(Error::Unsupported(format!("symbol {} needs a bounded λ-support", g.name())));
    }
    let (w_lo, w_hi) = g.bracket_window().unwrap_or((d1 as f64, f64::INFINITY));
    let k_lo = ((w_lo - d1 as f64) / 2.0).ceil().max(0.0) as usize;
    let k_hi = if w_hi.is_finite() { (((w_hi - d1 as f64) / 2.0).floor().max(0.0) as usize).min(max_order) } else { max_order };
    let samples = samples.max(2);
    let lo = l_lo.max(0.0);
    Ok((k_lo..=k_hi)
        .into_par_iter()
        .map(|k| {
            let b = bracket(k, d1);
            (0..samples)
                .map(|i| {
                    let l = lo + (l_hi - lo) * i as f64 / (samples - 1) as f64;
                    if l > 0.0 { g.eval(l, l / b).norm() } else { 0.0 }
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// Gaussian probe `exp(-|x-a|²/2σ²) exp(-|y|²/2τ²)` with `a = (|a|, 0, …)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianProbe {
    pub a_norm: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl GaussianProbe {
    pub fn lp_norm(&self, d1: usize, d2: usize, p: f64) -> f64 {
        let fx = (2.0 * PI * self.sigma * self.sigma / p).powf(d1 as f64 / (2.0 * p));
        let fy = (2.0 * PI * self.tau * self.tau / p).powf(d2 as f64 / (2.0 * p));
        fx * fy
    }

    /// `|ĥ(η)|²` of the `y` factor at `|η| = r`.
    fn y_weight(&self, d2: usize, r: f64) -> f64 {
        (2.0 * PI * self.tau * self.tau).powi(d2 as i32) * (-(self.tau * r).powi(2)).exp()
    }
}

/// `⟨e^{-(x-c)²/2σ²}, r^{1/4} h_m(√r x)⟩` for `m ≤ top`, by the trapezoidal rule
/// in `u = √r x`.
fn gaussian_overlaps(c: f64, sigma: f64, r: f64, top: usize) -> Vec<f64> {
    let sr = r.sqrt();
    let width = sigma * sr;
    let step = 0.5 * PI / ((2.0 * top as f64 + 1.0).sqrt() + 8.0 / width);
    // h_m is negligible beyond its turning point √(2m+1) plus a margin.
    let reach = (2.0 * top as f64 + 1.0).sqrt() + 12.0;
    let (u0, u1) = ((sr * c - 12.0 * width).max(-reach), (sr * c + 12.0 * width).min(reach));
    if u1 <= u0 {
        return vec![0.0; top + 1];
    }
    let n = ((u1 - u0) / step).ceil() as usize + 1;
    let h = (u1 - u0) / (n - 1) as f64;
    let mut acc = vec![0.0; top + 1];
    for i in 0..n {
        let u = u0 + i as f64 * h;
        let g = (-(u / sr - c).powi(2) / (2.0 * sigma * sigma)).exp();
        if g < 1e-300 {
            continue;
        }
        for (o, hm) in acc.iter_mut().zip(hermite_all(top, u)) {
            *o += g * hm;
        }
    }
    acc.iter().map(|v| v * h * r.powf(-0.25)).collect()
}

/// `‖G(L,T) f‖₂²` for a Gaussian probe `f`.
pub fn probe_image_energy(g: &JointSymbol, d1: usize, d2: usize, probe: &GaussianProbe, rule: &RadialRule) -> Result<SpectralValue> {
    check_dims(d1, d2)?;
    if !(probe.sigma > 0.0 && probe.tau > 0.0) {
        return Err(Error::InvalidArgument("probe widths must be positive".into()));
    }
    let window = radial_window(g, d1, rule.max_order)?;
    let v = radial_integral(window, d2, rule, |r| {
        let Some(top) = top_order(g, d1, r, rule.max_order) else { return 0.0 };
        let w = eigen_weights(g, d1, r, top);
        let first: Vec<f64> = gaussian_overlaps(probe.a_norm, probe.sigma, r, top).iter().map(|v| v * v).collect();
        let mut seqs = vec![first];
        if d1 > 1 {
            let rest: Vec<f64> = gaussian_overlaps(0.0, probe.sigma, r, top).iter().map(|v| v * v).collect();
            seqs.extend(std::iter::repeat(rest).take(d1 - 1));
        }
        let e = tensor::composition_sums(&seqs, top + 1);
        r.powi(d2 as i32 - 1) * probe.y_weight(d2, r) * w.iter().zip(&e).map(|(p, q)| p * q).sum::<f64>()
    })?;
    let c = radial_prefactor(d2);
    Ok(SpectralValue { value: c * v.value, tail: c * v.tail })
}

/// `‖G(L,T) f‖₂ / ‖f‖_p` for a Gaussian probe.
pub fn probe_ratio(g: &JointSymbol, d1: usize, d2: usize, p: f64, probe: &GaussianProbe, rule: &RadialRule) -> Result<f64> {
    let e = probe_image_energy(g, d1, d2, probe, rule)?;
    Ok(e.value.max(0.0).sqrt() / probe.lp_norm(d1, d2, p))
}

fn check_dims(d1: usize, d2: usize) -> Result<()> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidArgument("layer dimensions must be positive".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{band_truncate, DyadicBump, Symbol1D};
    use num_complex::Complex64;

    fn heat(cut: f64) -> JointSymbol {
        JointSymbol::new("heat", (0.0, cut), |l, _| Complex64::new((-l).exp(), 0.0))
    }

    /// Diagonal of the heat kernel `e^{-2L}` from Mehler's formula, integrated
    /// in `η` by the trapezoidal rule in `ln r`.
    fn mehler_energy(d1: usize, d2: usize, a: f64) -> f64 {
        let t = 2.0;
        let f = |r: f64| {
            let s = (2.0 * r * t).sinh();
            r.powi(d2 as i32 - 1) * (r / (2.0 * PI * s)).powf(d1 as f64 / 2.0) * (-r * a * a * (r * t).tanh()).exp()
        };
        let (u0, u1, n) = ((1e-9f64).ln(), (60.0f64).ln(), 200_000);
        let h = (u1 - u0) / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let r = (u0 + i as f64 * h).exp();
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * f(r) * r;
        }
        // ∫₀^{1e-9} ≈ f(0⁺)·r^{d₂}/d₂, negligible.
        radial_prefactor(d2) * acc * h
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn column_energy_matches_mehler() {
        let rule = RadialRule { panels: 96, nodes: 16, max_order: 1500 };
        for &(d1, d2, a) in &[(1, 1, 0.0), (2, 1, 0.7), (1, 2, 1.3)] {
            let v = kernel_column_energy(&heat(80.0), d1, d2, a, &rule).unwrap();
            let exact = mehler_energy(d1, d2, a);
            assert!((v.value / exact - 1.0).abs() < 1e-4, "{d1} {d2} {a}: {} vs {exact}", v.value);
        }
    }

    #[test]
    fn probe_parseval_for_unit_symbol() {
        let one = JointSymbol::new("one", (0.0, 100.0), |_, _| Complex64::new(1.0, 0.0));
        let probe = GaussianProbe { a_norm: 0.5, sigma: 1.0, tau: 1.0 };
        let rule = RadialRule { panels: 64, nodes: 12, max_order: 2000 };
        for &(d1, d2) in &[(1, 1), (2, 1)] {
            let e = probe_image_energy(&one, d1, d2, &probe, &rule).unwrap();
            let exact = probe.lp_norm(d1, d2, 2.0).powi(2);
            assert!((e.value / exact - 1.0).abs() < 1e-4, "{d1} {d2}: {} vs {exact}", e.value);
        }
    }

    #[test]
    fn narrow_probe_approaches_column_norm() {
        let f = Symbol1D::smooth_bump(0.25, 4.0).unwrap();
        let g = band_truncate(&f, 2, DyadicBump::new());
        let rule = RadialRule::default();
        let col = kernel_column_energy(&g, 1, 1, 0.3, &rule).unwrap().value.sqrt();
        let probe = GaussianProbe { a_norm: 0.3, sigma: 0.02, tau: 0.01 };
        let ratio = probe_ratio(&g, 1, 1, 1.0, &probe, &rule).unwrap();
        assert!(ratio <= col * (1.0 + 1e-6));
        assert!(ratio > 0.97 * col, "{ratio} vs {col}");
    }

    #[test]
    fn spectral_sup_of_band_reaches_peak() {
        let f = Symbol1D::smooth_bump(0.25, 4.0).unwrap();
        for l in 1..=4 {
            let g = band_truncate(&f, l, DyadicBump::new());
            let s = spectral_sup(&g, 2, 400, 4001).unwrap();
            assert!((s - 1.0).abs() < 1e-3, "{l}: {s}");
        }
    }

    #[test]
    fn column_sup_finds_interior_maximum() {
        let g = heat(80.0);
        let rule = RadialRule::default();
        let (a, v) = kernel_column_sup(&g, 1, 1, 0.0, 3.0, &rule).unwrap();
        let at0 = kernel_column_energy(&g, 1, 1, 0.0, &rule).unwrap().value.sqrt();
        // The heat kernel diagonal decreases in |a|.
        assert!(a < 1e-6 && (v - at0).abs() < 1e-12, "{a} {v} {at0}");
        assert!(radial_window(&JointSymbol::identity_lambda(), 1, 10).is_err());
    }
}
