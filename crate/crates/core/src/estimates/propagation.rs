use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{Criterion, ExperimentReport, SeriesPoint};
use crate::calculus::{cosine_propagate, ApplyOptions, GridFunction, GridSpec};
use crate::error::{Error, Result};
use crate::geometry::{cc_distance, CCPoint};

/// Default metric comparability allowance.
pub const DEFAULT_KAPPA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub kappa: f64,
    /// Verdict budget on the leakage relative to `‖f‖₂`.
    pub budget: f64,
    pub apply: ApplyOptions,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { kappa: DEFAULT_KAPPA, budget: 1e-3, apply: ApplyOptions { tail_tolerance: None, ..ApplyOptions::default() } }
    }
}

/// Points of the grid as [`CCPoint`]s, in storage order.
fn grid_points(spec: &GridSpec) -> Vec<CCPoint> {
    let (mut x, mut y) = (vec![0.0; spec.d1], vec![0.0; spec.d2]);
    (0..spec.len())
        .map(|i| {
            spec.coordinates(i, &mut x, &mut y);
            CCPoint::new(x.clone(), y.clone())
        })
        .collect()
}

/// Distance from every grid point to the sample set `support`, using for each
/// pair the periodic image of `y` nearest to the source.
pub(crate) fn distance_to_set(spec: &GridSpec, support: &[usize]) -> Vec<f64> {
    let pts = grid_points(spec);
    let period = 2.0 * spec.y_extent;
    let sources: Vec<&CCPoint> = support.iter().map(|&i| &pts[i]).collect();
    pts.par_iter()
        .map(|w| {
            let mut best = f64::INFINITY;
            let mut image = w.clone();
            for u in &sources {
                let dx: f64 = u.x.iter().zip(&w.x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if dx >= best {
                    continue;
                }
                for ((o, &wy), &uy) in image.y.iter_mut().zip(&w.y).zip(&u.y) {
                    *o = wy - period * ((wy - uy) / period).round();
                }
                best = best.min(cc_distance(u, &image));
            }
            best
        })
        .collect()
}

/// Relative `L²` mass of `u` where `distance > threshold`.
fn mass_beyond(u: &GridFunction, distance: &[f64], threshold: f64, norm: f64) -> f64 {
    let s: f64 = u.values.iter().zip(distance).filter(|(_, &d)| d > threshold).map(|(v, _)| v.norm_sqr()).sum();
    (s * u.spec.cell_volume()).sqrt() / norm
}

/// Leakage of `cos(t√L) f` beyond `κ(1+ε)|t|` from `U = {f ≠ 0}`, one point per margin `ε`.
pub fn propagation_leakage(t: f64, f: &GridFunction, margins: &[f64], opts: &PropagationOptions) -> Result<ExperimentReport> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite, got {t}")));
    }
    if margins.is_empty() || margins.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("margins must be positive".into()));
    }
    let support: Vec<usize> = (0..f.values.len()).filter(|&i| f.values[i] != Complex64::new(0.0, 0.0)).collect();
    if support.is_empty() {
        return Err(Error::InvalidArgument("f vanishes identically".into()));
    }
    let spec = f.spec;
    let norm = f.norm_l2();
    let (u, tail) = if t == 0.0 {
        (f.clone(), 0.0)
    } else {
        let a = cosine_propagate(t, f, &opts.apply)?;
        (a.function, a.report.relative_tail)
    };
    let distance = distance_to_set(&spec, &support);
    let mut r = ExperimentReport::new("propagation");
    r.input("t", t);
    r.input("grid", spec);
    r.input("margins", margins);
    r.input("options", opts);
    r.input("support_size", support.len());
    r.input("relative_tail", tail);
    let reach = opts.kappa * (1.0 + margins.iter().cloned().fold(f64::INFINITY, f64::min)) * t.abs();
    if touches_edge(&spec, &distance, reach) {
        r.flag(format!("the region within {reach:.3} of the support reaches the grid edge; wrap-around may contaminate the result"));
    }
    let mut sorted = margins.to_vec();
    sorted.sort_by(f64::total_cmp);
    for eps in sorted {
        let threshold = opts.kappa * (1.0 + eps) * t.abs();
        let region = distance.iter().filter(|&&d| d > threshold).count();
        if region == 0 {
            r.flag(format!("no grid point lies beyond distance {threshold:.3} of the support"));
        }
        r.push(SeriesPoint::new("leakage", 1.0 + eps, mass_beyond(&u, &distance, threshold, norm)).with("margin", eps).with("threshold", threshold).with("region_points", region as f64));
    }
    r.judge(Criterion::ValuesAtMost { budget: opts.budget });
    Ok(r)
}

/// Whether some point within `reach` of the support lies on the outer `x` cells.
/// The `y` direction is periodic and distances already use the nearest image.
fn touches_edge(spec: &GridSpec, distance: &[f64], reach: f64) -> bool {
    let (mut x, mut y) = (vec![0.0; spec.d1], vec![0.0; spec.d2]);
    distance.iter().enumerate().any(|(i, &d)| {
        if d > reach {
            return false;
        }
        spec.coordinates(i, &mut x, &mut y);
        x.iter().any(|v| v.abs() >= spec.x_extent - 2.0 * spec.dx())
    })
}

/// Repeats the leakage measurement at margin `ε` on successively finer grids.
/// `make` builds the initial datum on each grid.
pub fn propagation_refinement(
    t: f64,
    margin: f64,
    grids: &[GridSpec],
    make: impl Fn(GridSpec) -> GridFunction,
    opts: &PropagationOptions,
) -> Result<ExperimentReport> {
    if grids.is_empty() {
        return Err(Error::InvalidArgument("empty refinement sequence".into()));
    }
    let mut r = ExperimentReport::new("propagation-refinement");
    r.input("t", t);
    r.input("margin", margin);
    r.input("grids", grids);
    r.input("options", opts);
    for &spec in grids {
        let inner = propagation_leakage(t, &make(spec), &[margin], opts)?;
        for fl in inner.flags {
            r.flag(format!("n_x = {}: {fl}", spec.n_x));
        }
        let tail = inner.inputs.get("relative_tail").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
        r.push(SeriesPoint::new("leakage", spec.n_x as f64, inner.series[0].value).with("n_y", spec.n_y as f64).with("k_max", spec.k_max as f64).with("relative_tail", tail));
    }
    r.judge(Criterion::DecreasingTo { budget: opts.budget });
    Ok(r)
}

/// Gaussian `exp(−|x|²/2σ² − |y|²/2σ²)` set to zero where it drops below
/// `cutoff` times its peak, giving a compactly supported datum.
pub fn truncated_gaussian(spec: GridSpec, sigma: f64, cutoff: f64) -> GridFunction {
    GridFunction::from_fn(spec, |x, y| {
        let q: f64 = x.iter().chain(y).map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma);
        let v = (-q).exp();
        Complex64::new(if v >= cutoff { v } else { 0.0 }, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::report::Verdict;

    #[test]
    fn time_zero_has_no_leakage() {
        let spec = GridSpec::new(1, 1, 6.0, 6.0, 32, 32, 16).unwrap();
        let f = truncated_gaussian(spec, 0.6, 1e-6);
        let r = propagation_leakage(0.0, &f, &[0.1, 0.5], &PropagationOptions::default()).unwrap();
        assert!(r.series.iter().all(|p| p.value == 0.0));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn leakage_is_monotone_in_the_margin() {
        let spec = GridSpec::new(1, 1, 8.0, 2.0 * std::f64::consts::PI, 64, 32, 32).unwrap();
        let f = truncated_gaussian(spec, 0.5, 1e-8);
        let r = propagation_leakage(0.5, &f, &[1.0, 0.1, 0.5, 0.25], &PropagationOptions::default()).unwrap();
        let v: Vec<f64> = r.series.iter().map(|p| p.value).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]), "{v:?}");
        assert_eq!(r.series[0].extra["margin"], 0.1);
    }

    #[test]
    fn distance_to_set_uses_periodic_images() {
        let spec = GridSpec::new(1, 1, 2.0, 4.0, 4, 8, 0).unwrap();
        // Source at x = 0, y = −4 (index 2·8 + 0); its image at y = 4 sits one cell past y = 3.
        let d = distance_to_set(&spec, &[16]);
        let (mut x, mut y) = (vec![0.0], vec![0.0]);
        for (i, &dist) in d.iter().enumerate() {
            spec.coordinates(i, &mut x, &mut y);
            let dy = (y[0] + 4.0).abs().min(8.0 - (y[0] + 4.0).abs());
            let exact = cc_distance(&CCPoint::new(vec![0.0], vec![0.0]), &CCPoint::new(x.clone(), vec![dy]));
            assert!((dist - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let spec = GridSpec::new(1, 1, 2.0, 2.0, 8, 8, 4).unwrap();
        let f = truncated_gaussian(spec, 0.5, 1e-8);
        assert!(propagation_leakage(0.5, &GridFunction::zeros(spec), &[0.5], &PropagationOptions::default()).is_err());
        assert!(propagation_leakage(0.5, &f, &[], &PropagationOptions::default()).is_err());
        assert!(propagation_leakage(f64::NAN, &f, &[0.5], &PropagationOptions::default()).is_err());
    }
}
