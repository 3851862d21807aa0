use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

use crate::error::{ensure_positive, Error, Result};

type Rule1 = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
type Rule2 = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// A function `F` of one real variable with a declared support interval.
///
/// Multipliers built from it act as `F(√L)`.
#[derive(Clone)]
pub struct Symbol1D {
    rule: Rule1,
    support: (f64, f64),
    name: String,
}

impl fmt::Debug for Symbol1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol1D({}, support [{}, {}])", self.name, self.support.0, self.support.1)
    }
}

impl Symbol1D {
    pub fn new(name: impl Into<String>, support: (f64, f64), rule: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Result<Self> {
        if support.0.is_nan() || support.1.is_nan() || support.0 > support.1 {
            return Err(Error::InvalidArgument(format!("bad support [{}, {}]", support.0, support.1)));
        }
        Ok(Self { rule: Arc::new(rule), support, name: name.into() })
    }

    pub fn eval(&self, lambda: f64) -> Complex64 {
        if lambda < self.support.0 || lambda > self.support.1 {
            return Complex64::new(0.0, 0.0);
        }
        (self.rule)(lambda)
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Largest `|F|` among `samples` points spread over `[lo, hi]` outside the
    /// declared support; zero when the symbol honours its support.
    pub fn support_violation(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        (0..samples)
            .map(|i| lo + (hi - lo) * i as f64 / (samples.max(2) - 1) as f64)
            .filter(|&l| l < self.support.0 || l > self.support.1)
            .map(|l| (self.rule)(l).norm())
            .fold(0.0, f64::max)
    }

    /// `λ ↦ F(λ/s)`, supported on `s·supp F`.
    pub fn rescaled(&self, s: f64) -> Result<Self> {
        ensure_positive("scale", s)?;
        let inner = self.clone();
        Self::new(format!("{}(·/{s})", self.name), (s * self.support.0, s * self.support.1), move |l| inner.eval(l / s))
    }

    /// Pointwise product, supported on the intersection of supports.
    pub fn product(&self, other: &Symbol1D) -> Result<Self> {
        let lo = self.support.0.max(other.support.0);
        let hi = self.support.1.min(other.support.1).max(lo);
        let (a, b) = (self.clone(), other.clone());
        Self::new(format!("{}·{}", self.name, other.name), (lo, hi), move |l| a.eval(l) * b.eval(l))
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("const({value})"), (f64::NEG_INFINITY, f64::INFINITY), move |_| real(value)).unwrap()
    }

    /// Indicator of `[lo, hi]`.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        Self::new(format!("1[{lo},{hi}]"), (lo, hi), |_| real(1.0))
    }

    /// `exp(−(λ−center)²/(2σ²))` on the whole line.
    pub fn gaussian(center: f64, sigma: f64) -> Result<Self> {
        ensure_positive("sigma", sigma)?;
        Self::new(format!("gauss({center},{sigma})"), (f64::NEG_INFINITY, f64::INFINITY), move |l| {
            real((-(l - center).powi(2) / (2.0 * sigma * sigma)).exp())
        })
    }

    /// C^∞ bump supported on `[lo, hi]`, equal to 1 at the midpoint:
    /// `exp(1 − 1/(1 − u²))` with `u` the affine coordinate mapping `[lo, hi]` to `[−1, 1]`.
    pub fn smooth_bump(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("bump needs lo < hi, got [{lo}, {hi}]")));
        }
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        Self::new(format!("bump[{lo},{hi}]"), (lo, hi), move |l| {
            let u = (l - mid) / half;
            if u.abs() >= 1.0 { real(0.0) } else { real((1.0 - 1.0 / (1.0 - u * u)).exp()) }
        })
    }

    /// Piecewise-linear interpolant of `values` at equispaced `λ_i = lo + i·(hi−lo)/(n−1)`.
    pub fn sampled(name: impl Into<String>, lo: f64, hi: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 2 || !(lo < hi) {
            return Err(Error::InvalidArgument("sampled symbol needs >= 2 values on a nonempty interval".into()));
        }
        let step = (hi - lo) / (values.len() - 1) as f64;
        Self::new(name, (lo, hi), move |l| {
            let t = ((l - lo) / step).clamp(0.0, (values.len() - 1) as f64);
            let i = (t.floor() as usize).min(values.len() - 2);
            let w = t - i as f64;
            values[i] * (1.0 - w) + values[i + 1] * w
        })
    }
}

/// `λ ↦ (1 − tλ²)₊^δ`, so that the multiplier is the Bochner–Riesz mean `(1 − tL)₊^δ`.
/// For `δ = 0` this is the indicator of `tλ² < 1`.
pub fn bochner_riesz(delta: f64, t: f64) -> Result<Symbol1D> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be nonnegative, got {delta}")));
    }
    ensure_positive("t", t)?;
    let edge = 1.0 / t.sqrt();
    Symbol1D::new(format!("bochner_riesz({delta},{t})"), (-edge, edge), move |l| {
        let base = 1.0 - t * l * l;
        if base <= 0.0 {
            real(0.0)
        } else if delta == 0.0 {
            real(1.0)
        } else {
            real(base.powf(delta))
        }
    })
}

/// `λ ↦ cos(tλ)`.
pub fn cosine_symbol(t: f64) -> Symbol1D {
    Symbol1D::new(format!("cos({t}·)"), (f64::NEG_INFINITY, f64::INFINITY), move |l| real((t * l).cos())).unwrap()
}

/// A function `G(λ, r)` of the spectral variables of `(L, |T|)`, with a declared
/// `λ`-support used to judge whether truncated Hermite modes matter.
#[derive(Clone)]
pub struct JointSymbol {
    rule: Rule2,
    lambda_support: (f64, f64),
    vanishes_at_zero: bool,
    bracket_window: Option<(f64, f64)>,
    name: String,
}

impl fmt::Debug for JointSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JointSymbol({}, λ-support [{}, {}])", self.name, self.lambda_support.0, self.lambda_support.1)
    }
}

impl JointSymbol {
    pub fn new(
        name: impl Into<String>,
        lambda_support: (f64, f64),
        rule: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self { rule: Arc::new(rule), lambda_support, vanishes_at_zero: false, bracket_window: None, name: name.into() }
    }

    pub fn eval(&self, lambda: f64, r: f64) -> Complex64 {
        if r == 0.0 && self.vanishes_at_zero {
            return Complex64::new(0.0, 0.0);
        }
        if lambda < self.lambda_support.0 || lambda > self.lambda_support.1 {
            return Complex64::new(0.0, 0.0);
        }
        (self.rule)(lambda, r)
    }

    pub fn lambda_support(&self) -> (f64, f64) {
        self.lambda_support
    }

    pub fn vanishes_at_zero(&self) -> bool {
        self.vanishes_at_zero
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Range of `λ/r` outside which the symbol vanishes for `r > 0`, if declared.
    pub fn bracket_window(&self) -> Option<(f64, f64)> {
        self.bracket_window
    }

    /// `(λ, r) ↦ F(√λ)`, the multiplier `F(√L)`.
    pub fn from_multiplier(f: &Symbol1D) -> Self {
        let (lo, hi) = f.support();
        let lambda_support = (lo.max(0.0).powi(2), if hi < 0.0 { 0.0 } else { hi * hi });
        let f = f.clone();
        Self::new(format!("{}(√L)", f.name()), lambda_support, move |l, _| f.eval(l.max(0.0).sqrt()))
    }

    /// `(λ, r) ↦ λ`.
    pub fn identity_lambda() -> Self {
        Self::new("λ", (0.0, f64::INFINITY), |l, _| real(l))
    }

    /// Indicator of `λ = (2k + d₁)·r` for `r > 0`, selecting one eigenspace index.
    pub fn eigenspace_indicator(k: usize, d1: usize) -> Self {
        let bracket = (2 * k + d1) as f64;
        let mut s = Self::new(format!("1[λ/r={bracket}]"), (0.0, f64::INFINITY), move |l, r| {
            real(if r > 0.0 && (l / r - bracket).abs() < 1e-9 { 1.0 } else { 0.0 })
        });
        s.vanishes_at_zero = true;
        s.bracket_window = Some((bracket, bracket));
        s
    }
}

/// Smooth even dyadic partition of unity.
///
/// With the smooth step `S(u) = e^{−1/u} / (e^{−1/u} + e^{−1/(1−u)})` on `[0, 1]`,
/// `θ(λ) = S(2 − |λ|)` equals 1 on `[−1, 1]` and 0 off `[−2, 2]`, and the base
/// bump is `χ(λ) = θ(λ) − θ(2λ)`, supported in `1/2 ≤ |λ| ≤ 2`. The family
/// `χ_j(λ) = χ(λ/2^j)` telescopes, so `Σ_j χ_j(λ) = 1` for `λ ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DyadicBump;

impl DyadicBump {
    pub fn new() -> Self {
        Self
    }

    fn step(u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            let a = (-1.0 / u).exp();
            let b = (-1.0 / (1.0 - u)).exp();
            a / (a + b)
        }
    }

    /// Smooth cutoff equal to 1 on `[−1, 1]`, vanishing off `[−2, 2]`.
    pub fn plateau(lambda: f64) -> f64 {
        Self::step(2.0 - lambda.abs())
    }

    pub fn chi(&self, lambda: f64) -> f64 {
        Self::plateau(lambda) - Self::plateau(2.0 * lambda)
    }

    pub fn chi_j(&self, lambda: f64, j: i32) -> f64 {
        self.chi(lambda * 2f64.powi(-j))
    }

    /// Scale indices `j` whose `χ_j` can be nonzero at `λ ≠ 0`.
    pub fn active_scales(&self, lambda: f64) -> std::ops::RangeInclusive<i32> {
        let l = lambda.abs().log2();
        (l - 1.0).floor() as i32..=(l + 1.0).ceil() as i32
    }

    /// `χ_j` as a one-variable symbol.
    pub fn symbol(&self, j: i32) -> Symbol1D {
        let s = 2f64.powi(j);
        let b = *self;
        Symbol1D::new(format!("chi_{j}"), (-2.0 * s, 2.0 * s), move |l| real(b.chi_j(l, j))).unwrap()
    }

    /// `ψ = Σ_{|i|≤2} χ_i`, identically 1 on `1/2 ≤ |λ| ≤ 2` and supported in `1/8 ≤ |λ| ≤ 8`.
    pub fn widened(&self) -> Symbol1D {
        let b = *self;
        Symbol1D::new("psi", (-8.0, 8.0), move |l| real((-2..=2).map(|i| b.chi_j(l, i)).sum())).unwrap()
    }
}

/// Band truncation `G_ℓ(λ, r) = F(√λ)·χ_ℓ(λ/r)` for `r ≠ 0`, and 0 at `r = 0`.
pub fn band_truncate(f: &Symbol1D, level: i32, bump: DyadicBump) -> JointSymbol {
    let base = JointSymbol::from_multiplier(f);
    let f = f.clone();
    let mut s = JointSymbol::new(format!("{}_band{level}", f.name()), base.lambda_support(), move |l, r| {
        if r == 0.0 {
            return real(0.0);
        }
        f.eval(l.max(0.0).sqrt()) * bump.chi_j(l / r, level)
    });
    s.vanishes_at_zero = true;
    s.bracket_window = Some((2f64.powi(level - 1), 2f64.powi(level + 1)));
    s
}

/// `Σ_{ℓ > ι} G_ℓ`, i.e. `F(√λ)(1 − θ(λ/(2^ι r)))` with `θ` the plateau of [`DyadicBump`].
pub fn band_tail(f: &Symbol1D, iota: i32) -> JointSymbol {
    let base = JointSymbol::from_multiplier(f);
    let f = f.clone();
    let scale = 2f64.powi(iota);
    let mut s = JointSymbol::new(format!("{}_tail{iota}", f.name()), base.lambda_support(), move |l, r| {
        if r == 0.0 {
            return real(0.0);
        }
        f.eval(l.max(0.0).sqrt()) * (1.0 - DyadicBump::plateau(l / (r * scale)))
    });
    s.vanishes_at_zero = true;
    s.bracket_window = Some((scale, f64::INFINITY));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tail_symbol_sums_the_bands_above() {
        let f = Symbol1D::smooth_bump(0.25, 4.0).unwrap();
        let bump = DyadicBump::new();
        let tail = band_tail(&f, 2);
        for &(l, r) in &[(1.0, 0.3), (2.0, 0.05), (0.5, 0.1), (3.0, 1.0), (0.2, 0.001)] {
            let sum: Complex64 = (3..40).map(|j| band_truncate(&f, j, bump).eval(l, r)).sum();
            assert!((tail.eval(l, r) - sum).norm() < 1e-12, "{l} {r}");
        }
        assert_eq!(tail.bracket_window(), Some((4.0, f64::INFINITY)));
        assert_eq!(band_truncate(&f, 3, bump).bracket_window(), Some((4.0, 16.0)));
    }

    #[test]
    fn bump_support_and_peak() {
        let b = DyadicBump::new();
        assert_eq!(b.chi(1.0), 1.0);
        assert_eq!(b.chi(0.5), 0.0);
        assert_eq!(b.chi(2.0), 0.0);
        assert_eq!(b.chi(0.49), 0.0);
        assert_eq!(b.chi(2.01), 0.0);
        assert!(b.chi(0.7) > 0.0 && b.chi(1.7) > 0.0);
        assert_eq!(b.chi(-1.3), b.chi(1.3));
    }

    #[test]
    fn partition_of_unity_on_log_grid() {
        let b = DyadicBump::new();
        for i in -4000..=4000 {
            let l = 2f64.powf(i as f64 / 200.0);
            let s: f64 = (-40..=40).map(|j| b.chi_j(l, j)).sum();
            assert!((s - 1.0).abs() < 1e-10, "λ = {l}: {s}");
            let active: f64 = b.active_scales(l).map(|j| b.chi_j(l, j)).sum();
            assert!((active - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn widened_bump_plateau() {
        let psi = DyadicBump::new().widened();
        for l in [0.5, 0.8, 1.0, 1.9, 2.0, -1.2] {
            assert!((psi.eval(l).re - 1.0).abs() < 1e-12);
        }
        assert_eq!(psi.eval(0.12).re, 0.0);
        assert_eq!(psi.eval(8.5).re, 0.0);
    }

    #[test]
    fn bochner_riesz_values() {
        let br = bochner_riesz(1.5, 4.0).unwrap();
        assert_eq!(br.eval(0.0).re, 1.0);
        assert_eq!(br.eval(0.5).re, 0.0);
        assert_eq!(br.eval(0.7).re, 0.0);
        assert!((br.eval(0.25).re - 0.75f64.powf(1.5)).abs() < 1e-15);
        let proj = bochner_riesz(0.0, 4.0).unwrap();
        assert_eq!(proj.eval(0.49).re, 1.0);
        assert_eq!(proj.eval(0.5).re, 0.0);
        assert!(bochner_riesz(-0.1, 1.0).is_err());
        assert!(bochner_riesz(1.0, 0.0).is_err());
    }

    #[test]
    fn band_truncation_vanishes_at_zero_and_off_band() {
        let f = Symbol1D::smooth_bump(0.25, 4.0).unwrap();
        let g = band_truncate(&f, 2, DyadicBump::new());
        assert_eq!(g.eval(1.0, 0.0).re, 0.0);
        // λ/r = 1 lies outside [2, 8]
        assert_eq!(g.eval(1.0, 1.0).re, 0.0);
        assert!(g.eval(1.0, 0.25).re > 0.0);
    }

    #[test]
    fn support_violation_detects_leaky_rule() {
        let honest = Symbol1D::smooth_bump(0.0, 1.0).unwrap();
        assert_eq!(honest.support_violation(-2.0, 3.0, 501), 0.0);
        let leaky = Symbol1D::new("leaky", (0.0, 1.0), |l| real(l)).unwrap();
        assert!(leaky.support_violation(-2.0, 3.0, 501) > 1.0);
    }

    #[test]
    fn sampled_symbol_interpolates() {
        let s = Symbol1D::sampled("tab", 0.0, 2.0, vec![real(0.0), real(2.0), real(0.0)]).unwrap();
        assert!((s.eval(0.5).re - 1.0).abs() < 1e-15);
        assert_eq!(s.eval(2.5).re, 0.0);
    }

    proptest! {
        #[test]
        fn bands_sum_to_symbol(l in 1e-3..1e3f64, r in 1e-3..10.0f64) {
            let f = Symbol1D::gaussian(1.0, 2.0).unwrap();
            let b = DyadicBump::new();
            let total: Complex64 = (-30..=30).map(|j| band_truncate(&f, j, b).eval(l, r)).sum();
            prop_assert!((total - f.eval(l.sqrt())).norm() < 1e-10);
        }

        #[test]
        fn chi_j_support(l in 1e-6..1e6f64, j in -20i32..20) {
            let v = DyadicBump::new().chi_j(l, j);
            let s = 2f64.powi(j);
            if v != 0.0 {
                prop_assert!(l >= s / 2.0 && l <= 2.0 * s);
            }
        }
    }
}
