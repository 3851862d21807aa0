//! Comparison metric, dilations, ball volumes and Euclidean hulls for the
//! Grushin geometry on ℝ^{d₁} × ℝ^{d₂}.

mod cover;

pub use cover::{cover, y_slab_decompose, Cell, Cover, CoverOptions, LayerBox};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Default constant in the `y`-radius `C·R²` of [`box_hull`].
pub const DEFAULT_HULL_CONSTANT: f64 = 9.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CCPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl CCPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, y }
    }

    pub fn origin(d1: usize, d2: usize) -> Self {
        Self { x: vec![0.0; d1], y: vec![0.0; d2] }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    pub fn check_dims(&self, d1: usize, d2: usize) -> Result<()> {
        if self.x.len() != d1 {
            return Err(Error::DimensionMismatch { expected: d1, got: self.x.len() });
        }
        if self.y.len() != d2 {
            return Err(Error::DimensionMismatch { expected: d2, got: self.y.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: CCPoint,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: CCPoint, radius: f64) -> Result<Self> {
        ensure_positive("radius", radius)?;
        Ok(Self { center, radius })
    }

    /// Membership in the comparison ball `{ w : cc_distance(center, w) < R }`.
    pub fn contains(&self, w: &CCPoint) -> bool {
        cc_distance(&self.center, w) < self.radius
    }
}

pub fn homogeneous_dimension(d1: usize, d2: usize) -> usize {
    d1 + 2 * d2
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

pub(crate) fn dist(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Two-case comparison function for the control distance:
/// `|x−a| + |y−b|/(|x|+|a|)` when `|y−b|^{1/2} < |x|+|a|`, else `|x−a| + |y−b|^{1/2}`.
///
/// Equivalent to the sub-Riemannian distance up to absolute constants. It is
/// only a quasi-metric.
pub fn cc_distance(z: &CCPoint, w: &CCPoint) -> f64 {
    let dx = dist(&z.x, &w.x);
    let dy = dist(&z.y, &w.y);
    let s = norm(&z.x) + norm(&w.x);
    let root = dy.sqrt();
    if root < s {
        dx + dy / s
    } else {
        dx + root
    }
}

/// `δ_t(x, y) = (tx, t²y)`.
pub fn dilate(t: f64, z: &CCPoint) -> Result<CCPoint> {
    ensure_positive("t", t)?;
    Ok(CCPoint { x: z.x.iter().map(|v| t * v).collect(), y: z.y.iter().map(|v| t * t * v).collect() })
}

/// `R^{d₁+d₂} · max{R, |a|}^{d₂}`, comparable to the measure of the ball of
/// radius `R` about any point with first layer `a`.
pub fn ball_volume(radius: f64, a: &[f64], d2: usize) -> Result<f64> {
    ensure_positive("radius", radius)?;
    let d1 = a.len();
    Ok(radius.powi((d1 + d2) as i32) * radius.max(norm(a)).powi(d2 as i32))
}

/// Product of Euclidean balls `B_R(a) × B_{C R²}(b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclideanHull {
    pub x_center: Vec<f64>,
    pub x_radius: f64,
    pub y_center: Vec<f64>,
    pub y_radius: f64,
}

impl EuclideanHull {
    pub fn contains(&self, w: &CCPoint) -> bool {
        dist(&w.x, &self.x_center) <= self.x_radius && dist(&w.y, &self.y_center) <= self.y_radius
    }
}

/// Euclidean box containing the comparison ball, valid when `R ≥ |a|/4`.
pub fn box_hull(ball: &Ball, hull_constant: f64) -> Result<EuclideanHull> {
    ensure_positive("hull_constant", hull_constant)?;
    let center_norm = norm(&ball.center.x);
    if ball.radius < center_norm / 4.0 {
        return Err(Error::HullHypothesis { radius: ball.radius, center_norm });
    }
    Ok(EuclideanHull {
        x_center: ball.center.x.clone(),
        x_radius: ball.radius,
        y_center: ball.center.y.clone(),
        y_radius: hull_constant * ball.radius * ball.radius,
    })
}
