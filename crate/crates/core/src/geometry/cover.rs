use serde::{Deserialize, Serialize};

use super::{cc_distance, norm, CCPoint};
use crate::error::{ensure_positive, Error, Result};

/// Axis-aligned box split into the two layers, each axis an interval `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBox {
    pub x: Vec<(f64, f64)>,
    pub y: Vec<(f64, f64)>,
}

impl LayerBox {
    pub fn new(x: Vec<(f64, f64)>, y: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in x.iter().chain(&y) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!("box side [{lo}, {hi}] must be bounded and nonempty")));
            }
        }
        Ok(Self { x, y })
    }

    pub fn volume(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, w: &CCPoint) -> bool {
        let inside = |sides: &[(f64, f64)], v: &[f64]| sides.iter().zip(v).all(|(&(lo, hi), &t)| lo <= t && t < hi);
        inside(&self.x, &w.x) && inside(&self.y, &w.y)
    }

    fn intersect(&self, other: &LayerBox) -> Option<LayerBox> {
        let meet = |a: &[(f64, f64)], b: &[(f64, f64)]| -> Option<Vec<(f64, f64)>> {
            a.iter()
                .zip(b)
                .map(|(&(l1, h1), &(l2, h2))| {
                    let (lo, hi) = (l1.max(l2), h1.min(h2));
                    (lo < hi).then_some((lo, hi))
                })
                .collect()
        };
        Some(LayerBox { x: meet(&self.x, &other.x)?, y: meet(&self.y, &other.y)? })
    }

    /// `per_axis^d` points on a regular interior lattice of the box.
    fn witnesses(&self, per_axis: usize) -> Vec<CCPoint> {
        let sides: Vec<(f64, f64)> = self.x.iter().chain(&self.y).copied().collect();
        let d1 = self.x.len();
        let total = per_axis.pow(sides.len() as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0; sides.len()];
        for flat in 0..total {
            crate::tensor::unravel(flat, &vec![per_axis; sides.len()], &mut idx);
            let coords: Vec<f64> = sides
                .iter()
                .zip(&idx)
                .map(|(&(lo, hi), &i)| lo + (hi - lo) * (i as f64 + 0.5) / per_axis as f64)
                .collect();
            out.push(CCPoint::new(coords[..d1].to_vec(), coords[d1..].to_vec()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub region: LayerBox,
    pub center: CCPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverOptions {
    /// Witness points per axis sampled inside each cell during overlap certification.
    pub witness_per_axis: usize,
    /// Largest overlap count accepted before construction is rejected.
    pub max_overlap: usize,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self { witness_per_axis: 3, max_overlap: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub cells: Vec<Cell>,
    pub radius: f64,
    /// Certified `(λ, overlap count)` pairs.
    pub overlaps: Vec<(f64, usize)>,
}

impl Cover {
    pub fn overlap_bound(&self, lambda: f64) -> Option<usize> {
        self.overlaps.iter().find(|(l, _)| *l == lambda).map(|&(_, c)| c)
    }
}

/// Lower bound of `|x| + |a|` over the cube of half-diagonal `R/2` about `a`.
fn layer_floor(a_norm: f64, radius: f64) -> f64 {
    a_norm.max(2.0 * a_norm - radius / 2.0)
}

/// Half-diagonal of the `y`-cube about a center with first-layer norm `a_norm`,
/// small enough that the `y`-contribution to `cc_distance` stays below `R/2`.
fn y_half_diagonal(a_norm: f64, radius: f64) -> f64 {
    0.99 * (radius * radius / 4.0).max(radius / 2.0 * layer_floor(a_norm, radius))
}

/// Intervals `[lo + i·side, lo + (i+1)·side)` of a regular tiling starting at
/// `lo` that meet `[lo, hi)`. Adjacent intervals share their endpoint exactly.
fn tiling(lo: f64, hi: f64, side: f64) -> Vec<(f64, f64)> {
    let count = ((hi - lo) / side).ceil().max(1.0) as usize;
    (0..count).map(|i| (lo + i as f64 * side, lo + (i + 1) as f64 * side)).collect()
}

fn midpoints(sides: &[(f64, f64)]) -> Vec<f64> {
    sides.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
}

fn product<T: Copy>(axes: &[Vec<T>]) -> Vec<Vec<T>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

/// Disjoint cells tiling `region`, each inside the comparison ball of radius
/// `R` about its center, with overlap counts of the dilated balls certified for
/// every factor in `lambdas`.
pub fn cover(region: &LayerBox, radius: f64, lambdas: &[f64], options: CoverOptions) -> Result<Cover> {
    ensure_positive("radius", radius)?;
    for &l in lambdas {
        if !(l >= 1.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("dilation factor must be >= 1, got {l}")));
        }
    }
    if options.witness_per_axis == 0 {
        return Err(Error::InvalidArgument("witness_per_axis must be positive".into()));
    }
    let d1 = region.x.len();
    let d2 = region.y.len();
    let x_side = radius / (d1 as f64).sqrt();
    let x_axes: Vec<Vec<(f64, f64)>> = region.x.iter().map(|&(lo, hi)| tiling(lo, hi, x_side)).collect();
    let mut cells = Vec::new();
    // (first-layer center, range of cells in that column)
    let mut columns = Vec::new();
    for xs in product(&x_axes) {
        let a = midpoints(&xs);
        let hy = y_half_diagonal(norm(&a), radius);
        let y_side = 2.0 * hy / (d2 as f64).sqrt();
        let y_axes: Vec<Vec<(f64, f64)>> = region.y.iter().map(|&(lo, hi)| tiling(lo, hi, y_side)).collect();
        let start = cells.len();
        for ys in product(&y_axes) {
            let cube = LayerBox { x: xs.clone(), y: ys.clone() };
            if let Some(part) = cube.intersect(region) {
                cells.push(Cell { region: part, center: CCPoint::new(a.clone(), midpoints(&ys)) });
            }
        }
        columns.push((a, start..cells.len()));
    }
    let mut overlaps = Vec::with_capacity(lambdas.len());
    let witnesses: Vec<CCPoint> =
        cells.iter().flat_map(|c| c.region.witnesses(options.witness_per_axis)).collect();
    for &lambda in lambdas {
        let reach = lambda * radius;
        let count_at = |w: &CCPoint| -> usize {
            let wx = norm(&w.x);
            columns
                .iter()
                .filter(|(a, _)| super::dist(a, &w.x) < reach)
                .map(|(a, range)| {
                    // the ball about (a, b) only reaches |y − b| < max(ρ², ρ(|x|+|a|))
                    let y_reach = (reach * reach).max(reach * (wx + norm(a)));
                    let column = &cells[range.clone()];
                    let first = column.partition_point(|c| c.center.y[0] <= w.y[0] - y_reach);
                    column[first..]
                        .iter()
                        .take_while(|c| c.center.y[0] < w.y[0] + y_reach)
                        .filter(|c| cc_distance(&c.center, w) < reach)
                        .count()
                })
                .sum()
        };
        let found = witnesses.iter().map(count_at).max().unwrap_or(0);
        if found > options.max_overlap {
            return Err(Error::OverlapBound { lambda, found, bound: options.max_overlap });
        }
        overlaps.push((lambda, found));
    }
    Ok(Cover { cells, radius, overlaps })
}

/// Splits a cell into slabs in the `y` layer of side `2C·R_ℓ/√d₂`, where
/// `R = 2^ι` and `R_ℓ = 2^ℓ R`, so each piece lies in `B_R(a) × B_{C R_ℓ}(b_m)`
/// for its own `y`-center `b_m`. Requires `|a| ≤ 4R`.
pub fn y_slab_decompose(cell: &Cell, level: i32, iota: i32, hull_constant: f64) -> Result<Vec<Cell>> {
    ensure_positive("hull_constant", hull_constant)?;
    if level < 0 || level > iota {
        return Err(Error::InvalidArgument(format!("slab level {level} must lie in [0, {iota}]")));
    }
    let radius = 2f64.powi(iota);
    let a_norm = norm(&cell.center.x);
    if a_norm > 4.0 * radius {
        return Err(Error::InvalidArgument(format!(
            "slab decomposition needs |a| <= 4R (|a| = {a_norm}, R = {radius})"
        )));
    }
    let r_level = 2f64.powi(level) * radius;
    let d2 = cell.region.y.len();
    let side = 2.0 * hull_constant * r_level / (d2 as f64).sqrt();
    let y_axes: Vec<Vec<(f64, f64)>> = cell.region.y.iter().map(|&(lo, hi)| tiling(lo, hi, side)).collect();
    Ok(product(&y_axes)
        .into_iter()
        .filter_map(|ys| {
            let slab = LayerBox { x: cell.region.x.clone(), y: ys.clone() };
            slab.intersect(&cell.region)
                .map(|part| Cell { region: part, center: CCPoint::new(cell.center.x.clone(), midpoints(&ys)) })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(half_x: f64, half_y: f64) -> LayerBox {
        LayerBox::new(vec![(-half_x, half_x)], vec![(-half_y, half_y)]).unwrap()
    }

    fn disjoint_and_exhaustive(region: &LayerBox, cells: &[Cell]) {
        let total: f64 = cells.iter().map(|c| c.region.volume()).sum();
        assert!((total - region.volume()).abs() < 1e-9 * region.volume(), "{total} vs {}", region.volume());
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[i + 1..] {
                assert!(a.region.intersect(&b.region).is_none());
            }
        }
    }

    #[test]
    fn cells_partition_region_and_sit_in_balls() {
        let region = square(2.0, 3.0);
        let c = cover(&region, 0.5, &[1.0], CoverOptions::default()).unwrap();
        disjoint_and_exhaustive(&region, &c.cells);
        for cell in &c.cells {
            for w in cell.region.witnesses(4) {
                assert!(cc_distance(&cell.center, &w) < c.radius);
            }
            // corners as well
            let (x0, x1) = cell.region.x[0];
            let (y0, y1) = cell.region.y[0];
            for (x, y) in [(x0, y0), (x0, y1), (x1, y0), (x1, y1)] {
                assert!(cc_distance(&cell.center, &CCPoint::new(vec![x], vec![y])) < c.radius);
            }
        }
    }

    #[test]
    fn single_small_region_gives_one_cell() {
        let region = square(0.1, 0.001);
        let c = cover(&region, 1.0, &[], CoverOptions::default()).unwrap();
        assert_eq!(c.cells.len(), 1);
    }

    #[test]
    fn overlap_bound_independent_of_radius() {
        let region = square(4.0, 16.0);
        let counts: Vec<usize> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&r| cover(&region, r, &[3.0], CoverOptions::default()).unwrap().overlap_bound(3.0).unwrap())
            .collect();
        let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
        assert!(hi <= 2 * lo && hi < 200, "{counts:?}");
    }

    #[test]
    fn overlap_limit_is_enforced() {
        let region = square(1.0, 1.0);
        let opts = CoverOptions { witness_per_axis: 2, max_overlap: 1 };
        assert!(matches!(cover(&region, 0.5, &[4.0], opts), Err(Error::OverlapBound { .. })));
    }

    #[test]
    fn halving_radius_scales_count_by_volume_growth() {
        // away from x = 0 the count grows like 2^d, across it like 2^Q (up to slack)
        for (region, lo, hi) in [
            (LayerBox::new(vec![(8.0, 12.0)], vec![(-4.0, 4.0)]).unwrap(), 4.0, 8.0),
            (square(1.0, 1.0), 4.0, 8.0),
        ] {
            let n1 = cover(&region, 0.25, &[], CoverOptions::default()).unwrap().cells.len() as f64;
            let n2 = cover(&region, 0.125, &[], CoverOptions::default()).unwrap().cells.len() as f64;
            let ratio = n2 / n1;
            assert!(ratio >= lo / 2.0 && ratio <= hi * 2.0, "ratio {ratio}");
        }
    }

    #[test]
    fn slab_counts_follow_level() {
        let iota = 3;
        let radius = 8.0;
        let region = LayerBox::new(vec![(-16.0, 16.0)], vec![(-600.0, 600.0)]).unwrap();
        let c = cover(&region, radius, &[], CoverOptions::default()).unwrap();
        let cell = c.cells.iter().find(|c| norm(&c.center.x) <= 4.0 * radius).unwrap();
        let top = y_slab_decompose(cell, iota, iota, 9.0).unwrap();
        assert!(top.len() <= 2);
        let bottom = y_slab_decompose(cell, 0, iota, 9.0).unwrap();
        assert!(bottom.len() <= 2 * 8, "{}", bottom.len());
        disjoint_and_exhaustive(&cell.region, &bottom);
        for (i, a) in bottom.iter().enumerate() {
            for b in &bottom[i + 1..] {
                assert!((a.center.y[0] - b.center.y[0]).abs() > radius / 2.0);
            }
        }
        assert!(y_slab_decompose(cell, iota + 1, iota, 9.0).is_err());
        assert!(y_slab_decompose(cell, -1, iota, 9.0).is_err());
    }
}
