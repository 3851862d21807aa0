use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use crate::error::{ensure_positive, Result};
use crate::tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegridReport {
    /// Output samples whose preimage under the dilation left the grid; they are set to 0.
    pub extrapolated: usize,
}

/// Row-major `n x n` matrix evaluating the four-point Lagrange interpolant of
/// samples at `points` in `scale·points[i]`. Rows whose target leaves
/// `[points[0], points[n−1]]` are zero. Returns the matrix and the number of
/// in-range rows.
fn interpolation_matrix(points: &[f64], scale: f64) -> (Vec<f64>, usize) {
    let n = points.len();
    let h = points[1] - points[0];
    let (first, last) = (points[0], points[n - 1]);
    let width = n.min(4);
    let mut m = vec![0.0; n * n];
    let mut inside = 0;
    for (i, &p) in points.iter().enumerate() {
        let u = scale * p;
        let slack = 1e-12 * h;
        if u < first - slack || u > last + slack {
            continue;
        }
        inside += 1;
        let cell = ((u - first) / h).floor() as isize;
        let base = (cell - (width as isize / 2 - 1)).clamp(0, (n - width) as isize) as usize;
        for a in 0..width {
            let mut w = 1.0;
            for b in 0..width {
                if a != b {
                    w *= (u - points[base + b]) / (points[base + a] - points[base + b]);
                }
            }
            m[i * n + base + a] = w;
        }
    }
    (m, inside)
}

/// `f ∘ δ_t`, i.e. `(x, y) ↦ f(tx, t²y)`, by separable cubic interpolation.
pub fn regrid_dilate(t: f64, f: &GridFunction) -> Result<(GridFunction, RegridReport)> {
    ensure_positive("t", t)?;
    let spec = f.spec;
    let (xs, ys) = (spec.x_points(), spec.y_points());
    let (mx, in_x) = interpolation_matrix(&xs, t);
    let (my, in_y) = interpolation_matrix(&ys, t * t);
    let shape = spec.shape();
    let mut data = f.values.clone();
    for axis in 0..shape.len() {
        let (m, rows) = if axis < spec.d1 { (&mx, spec.n_x) } else { (&my, spec.n_y) };
        data = tensor::contract_axis(&data, &shape, axis, m, rows).0;
    }
    let kept = in_x.pow(spec.d1 as u32) * in_y.pow(spec.d2 as u32);
    Ok((GridFunction { spec, values: data }, RegridReport { extrapolated: spec.len() - kept }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::grid::GridSpec;
    use num_complex::Complex64;

    fn smooth(spec: GridSpec) -> GridFunction {
        GridFunction::from_fn(spec, |x, y| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new((-r2 - 0.3 * y[0] * y[0]).exp(), x[0] * (-r2 - y[0] * y[0]).exp())
        })
    }

    #[test]
    fn unit_dilation_is_identity() {
        let spec = GridSpec::new(2, 1, 4.0, 5.0, 20, 24, 0).unwrap();
        let f = smooth(spec);
        let (g, rep) = regrid_dilate(1.0, &f).unwrap();
        assert_eq!(rep.extrapolated, 0);
        assert!(g.relative_distance(&f).unwrap() < 1e-14);
    }

    #[test]
    fn matches_exact_dilation() {
        let spec = GridSpec::new(1, 1, 6.0, 10.0, 192, 256, 0).unwrap();
        let f = smooth(spec);
        let (g, rep) = regrid_dilate(0.5, &f).unwrap();
        assert_eq!(rep.extrapolated, 0);
        let exact = GridFunction::from_fn(spec, |x, y| {
            let (u, v) = (0.5 * x[0], 0.25 * y[0]);
            Complex64::new((-u * u - 0.3 * v * v).exp(), u * (-u * u - v * v).exp())
        });
        assert!(g.relative_distance(&exact).unwrap() < 1e-5);
    }

    #[test]
    fn composition_and_clipping() {
        let spec = GridSpec::new(1, 1, 6.0, 10.0, 256, 512, 0).unwrap();
        let f = smooth(spec);
        let (up, rep_up) = regrid_dilate(2.0, &f).unwrap();
        assert!(rep_up.extrapolated > 0);
        let (back, _) = regrid_dilate(0.5, &up).unwrap();
        assert!(back.relative_distance(&f).unwrap() < 1e-3);
        assert!(regrid_dilate(0.0, &f).is_err());
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let pts: Vec<f64> = (0..10).map(|i| -1.0 + 0.2 * i as f64).collect();
        let (m, _) = interpolation_matrix(&pts, 0.77);
        let poly = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x;
        for (i, &p) in pts.iter().enumerate() {
            let v: f64 = (0..pts.len()).map(|j| m[i * pts.len() + j] * poly(pts[j])).sum();
            assert!((v - poly(0.77 * p)).abs() < 1e-12);
        }
    }
}
