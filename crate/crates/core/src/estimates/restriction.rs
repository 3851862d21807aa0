use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::norm::{NormEstimate, NormMethod};
use super::report::{check_exponent, restriction_exponent_limit, restriction_in_hypothesis, Criterion, ExperimentReport, SeriesPoint, DEFAULT_EXPONENT_TOLERANCE};
use super::spectral::{kernel_column_sup, probe_ratio, radial_window, spectral_sup, GaussianProbe, RadialRule};
use crate::calculus::{band_tail, band_truncate, DyadicBump, JointSymbol, Symbol1D};
use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{ball_volume, homogeneous_dimension};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralRunOptions {
    pub rule: RadialRule,
    /// Number of Gaussian probes for `1 < p < 2` and for cut-off operators at `p = 2`.
    pub trials: usize,
    pub seed: u64,
    /// Tolerance on fitted exponents.
    pub tolerance: f64,
}

impl Default for SpectralRunOptions {
    fn default() -> Self {
        Self { rule: RadialRule::default(), trials: 32, seed: 0, tolerance: DEFAULT_EXPONENT_TOLERANCE }
    }
}

pub(crate) fn check_support(f: &Symbol1D, min: f64, max: f64) -> Result<()> {
    let (lo, hi) = f.support();
    if lo < min || hi > max {
        return Err(Error::SupportOutOfRange { lo, hi, min, max });
    }
    Ok(())
}

/// `(∫|F|²)^{1/2}` over the (bounded) support, by the midpoint rule.
pub(crate) fn symbol_l2_norm(f: &Symbol1D) -> f64 {
    let (lo, hi) = f.support();
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    ((0..n).map(|i| f.eval(lo + (i as f64 + 0.5) * h).norm_sqr()).sum::<f64>() * h).sqrt()
}

pub(crate) fn symbol_sup(f: &Symbol1D) -> f64 {
    let (lo, hi) = f.support();
    let n = 20_000;
    (0..=n).map(|i| f.eval(lo + (hi - lo) * i as f64 / n as f64).norm()).fold(0.0, f64::max)
}

/// Set of first-layer centers `|a|` over which the operator acts: the whole
/// space, or the `x`-projection of a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Domain {
    Whole,
    Ball { a_norm: f64, radius: f64, y_radius: f64 },
}

/// Lower bound for `‖G(L,T)χ‖_{p→2}`: the exact column supremum at `p = 1`, the
/// spectral supremum at `p = 2` on the whole space, seeded Gaussian probes otherwise.
/// Returns the estimate and the center `|a|` where it was attained.
pub(crate) fn spectral_opnorm(g: &JointSymbol, d1: usize, d2: usize, p: f64, domain: Domain, opts: &SpectralRunOptions) -> Result<(NormEstimate, f64)> {
    check_exponent(p)?;
    let window = radial_window(g, d1, opts.rule.max_order)?;
    let l_hi = g.lambda_support().1;
    let (a_lo, a_hi) = match domain {
        Domain::Whole => (0.0, 1.5 * l_hi.sqrt() / window.lo),
        Domain::Ball { a_norm, radius, .. } => ((a_norm - radius).max(0.0), a_norm + radius),
    };
    if p == 1.0 {
        let (a, v) = kernel_column_sup(g, d1, d2, a_lo, a_hi, &opts.rule)?;
        return Ok((NormEstimate::new(v, 1, NormMethod::KernelColumnSup)?, a));
    }
    if p == 2.0 && domain == Domain::Whole {
        let v = spectral_sup(g, d1, opts.rule.max_order.min(4096), 2001)?;
        return Ok((NormEstimate::new(v, 1, NormMethod::SpectralSup)?, 0.0));
    }
    let sigma_lo = 0.05 / l_hi.sqrt();
    let (sigma_hi, tau_cap) = match domain {
        Domain::Whole => (1.0 / window.lo.sqrt() + a_hi, f64::INFINITY),
        Domain::Ball { radius, y_radius, .. } => (radius / 3.0, y_radius / 3.0),
    };
    if sigma_hi <= sigma_lo {
        return Err(Error::InvalidArgument("ball too small for probes at this frequency".into()));
    }
    let best = (0..opts.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64 + 1);
            let a = rng.gen_range(a_lo..=a_hi);
            let sigma = rng.gen_range(sigma_lo.ln()..sigma_hi.ln()).exp();
            let tau = (sigma * sigma.max(a) * rng.gen_range(-3.0f64..3.0).exp2()).min(tau_cap);
            let probe = GaussianProbe { a_norm: a, sigma, tau };
            probe_ratio(g, d1, d2, p, &probe, &opts.rule).map(|v| (v, a))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0.0, a_lo), |acc, x| if x.0 > acc.0 { x } else { acc });
    Ok((NormEstimate::new(best.0, opts.trials, NormMethod::RandomProbe)?, best.1))
}

fn method_code(m: NormMethod) -> f64 {
    match m {
        NormMethod::RandomProbe => 0.0,
        NormMethod::PowerIterationOnDual => 1.0,
        NormMethod::ExhaustiveSmall => 2.0,
        NormMethod::KernelColumnSup => 3.0,
        NormMethod::SpectralSup => 4.0,
    }
}

fn common_inputs(r: &mut ExperimentReport, f: &Symbol1D, p: f64, d1: usize, d2: usize, opts: &SpectralRunOptions) {
    r.input("symbol", f.name());
    r.input("support", f.support());
    r.input("p", p);
    r.input("d1", d1);
    r.input("d2", d2);
    r.input("options", opts);
    r.input("symbol_l2_norm", symbol_l2_norm(f));
    r.input("symbol_sup", symbol_sup(f));
}

fn judge_exponent(r: &mut ExperimentReport, p: f64, d1: usize, d2: usize, predicted: f64, tol: f64) {
    r.in_hypothesis = restriction_in_hypothesis(p, d1, d2);
    if !r.in_hypothesis {
        r.flag(format!(
            "p = {p} is outside 1 ≤ p ≤ {:.4} for (d1, d2) = ({d1}, {d2}); reported without a verdict",
            restriction_exponent_limit(d1, d2)
        ));
    }
    let n = r.fit.as_ref().map_or(0, |f| f.points);
    if n < 4 {
        r.flag(format!("exponent fitted over {n} points, fewer than 4"));
    }
    let crit = if p == 2.0 { Criterion::SlopeWithin { predicted, tolerance: 0.1 } } else { Criterion::SlopeAtMost { predicted, tolerance: tol } };
    r.judge(crit);
}

fn level_sweep(
    name: &str,
    f: &Symbol1D,
    p: f64,
    levels: &[i32],
    d1: usize,
    d2: usize,
    opts: &SpectralRunOptions,
    symbol: impl Fn(i32) -> JointSymbol + Sync,
) -> Result<ExperimentReport> {
    check_support(f, 0.125, 8.0)?;
    check_exponent(p)?;
    if levels.is_empty() {
        return Err(Error::InvalidArgument("empty level range".into()));
    }
    let mut r = ExperimentReport::new(name);
    common_inputs(&mut r, f, p, d1, d2, opts);
    r.input("levels", levels);
    let pts = levels
        .iter()
        .map(|&l| spectral_opnorm(&symbol(l), d1, d2, p, Domain::Whole, opts).map(|(e, a)| (l, e, a)))
        .collect::<Result<Vec<_>>>()?;
    for (l, e, a) in pts {
        r.push(SeriesPoint::new("norm", 2f64.powi(l), e.value).with("level", l as f64).with("method", method_code(e.method)).with("argmax_a", a));
    }
    let predicted = -(d2 as f64) * (1.0 / p - 0.5);
    r.input("predicted_exponent", predicted);
    if levels.len() >= 2 {
        r.fit_group("norm")?;
    }
    judge_exponent(&mut r, p, d1, d2, predicted, opts.tolerance);
    Ok(r)
}

/// `‖G_ℓ(L,T)‖_{p→2}` over `levels`, with `G_ℓ(λ, r) = F(√λ) χ_ℓ(λ/r)`, against the
/// predicted slope `−d₂(1/p − 1/2)` in `ℓ`.
pub fn restriction_decay(f: &Symbol1D, p: f64, levels: &[i32], d1: usize, d2: usize, opts: &SpectralRunOptions) -> Result<ExperimentReport> {
    let bump = DyadicBump::new();
    level_sweep("restriction", f, p, levels, d1, d2, opts, |l| band_truncate(f, l, bump))
}

/// `‖Σ_{ℓ>ι} G_ℓ(L,T)‖_{p→2}` over `iotas`.
pub fn restriction_tail_decay(f: &Symbol1D, p: f64, iotas: &[i32], d1: usize, d2: usize, opts: &SpectralRunOptions) -> Result<ExperimentReport> {
    level_sweep("restriction-tail", f, p, iotas, d1, d2, opts, |i| band_tail(f, i))
}

/// `‖F(√L) χ_B‖_{p→2}` for balls `B` of radius `radius_fraction·|a|` centered at
/// first-layer norms `a_list`, against the predicted exponent `−d₂(1/p − 1/2)` in `|a|`.
pub fn away_from_origin_gain(
    f: &Symbol1D,
    p: f64,
    a_list: &[f64],
    radius_fraction: f64,
    d1: usize,
    d2: usize,
    opts: &SpectralRunOptions,
) -> Result<ExperimentReport> {
    check_exponent(p)?;
    for &a in a_list {
        ensure_positive("|a|", a)?;
        let radius = radius_fraction * a;
        if !(radius > 0.0 && radius < a / 4.0) {
            return Err(Error::HullHypothesis { radius, center_norm: a });
        }
    }
    let g = JointSymbol::from_multiplier(f);
    let mut r = ExperimentReport::new("away-from-origin");
    common_inputs(&mut r, f, p, d1, d2, opts);
    r.input("a_list", a_list);
    r.input("radius_fraction", radius_fraction);
    let pts = a_list
        .iter()
        .map(|&a| {
            let radius = radius_fraction * a;
            let domain = Domain::Ball { a_norm: a, radius, y_radius: radius * radius.max(a) };
            spectral_opnorm(&g, d1, d2, p, domain, opts).map(|(e, w)| (a, radius, e, w))
        })
        .collect::<Result<Vec<_>>>()?;
    for (a, radius, e, w) in pts {
        r.push(SeriesPoint::new("norm", a, e.value).with("radius", radius).with("method", method_code(e.method)).with("argmax_a", w));
    }
    let predicted = -(d2 as f64) * (1.0 / p - 0.5);
    r.input("predicted_exponent", predicted);
    if a_list.len() >= 2 {
        r.fit_group("norm")?;
    }
    judge_exponent(&mut r, p, d1, d2, predicted, opts.tolerance);
    Ok(r)
}

/// Ball for [`stein_tomas_condition`], given by its first-layer center norm and radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBall {
    pub a_norm: f64,
    pub radius: f64,
}

/// `‖F(t√L) χ_B‖_{p₀→2}` against `((R/t)^Q / μ(B_R))^{1/p₀ − 1/2} ‖F‖_∞` for each `t`.
/// The series holds the ratio of the two sides; with `constant` given the
/// verdict checks every ratio against it.
pub fn stein_tomas_condition(
    f: &Symbol1D,
    t_list: &[f64],
    ball: RadialBall,
    p0: f64,
    d1: usize,
    d2: usize,
    constant: Option<f64>,
    opts: &SpectralRunOptions,
) -> Result<ExperimentReport> {
    check_exponent(p0)?;
    check_support(f, 0.0, 1.0)?;
    ensure_positive("radius", ball.radius)?;
    let mut r = ExperimentReport::new("stein-tomas");
    common_inputs(&mut r, f, p0, d1, d2, opts);
    r.input("t_list", t_list);
    r.input("ball", ball);
    r.input("constant", constant);
    let q = homogeneous_dimension(d1, d2) as f64;
    let mut a = vec![0.0; d1];
    a[0] = ball.a_norm;
    let mu = ball_volume(ball.radius, &a, d2)?;
    let sup = symbol_sup(f);
    for &t in t_list {
        ensure_positive("t", t)?;
        if ball.radius <= t {
            return Err(Error::InvalidArgument(format!("ball radius {} must exceed t = {t}", ball.radius)));
        }
        let g = JointSymbol::from_multiplier(&f.rescaled(1.0 / t)?);
        let domain = Domain::Ball { a_norm: ball.a_norm, radius: ball.radius, y_radius: ball.radius * ball.radius.max(ball.a_norm) };
        let (e, _) = spectral_opnorm(&g, d1, d2, p0, domain, opts)?;
        let rhs = ((ball.radius / t).powf(q) / mu).powf(1.0 / p0 - 0.5) * sup;
        r.push(SeriesPoint::new("ratio", t, e.value / rhs).with("lhs", e.value).with("rhs", rhs).with("method", method_code(e.method)));
    }
    r.judge(match constant {
        Some(budget) => Criterion::ValuesAtMost { budget },
        None => Criterion::None,
    });
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::report::Verdict;
    use crate::estimates::spectral::kernel_column_energy;

    fn bump() -> Symbol1D {
        Symbol1D::smooth_bump(0.25, 4.0).unwrap()
    }

    #[test]
    fn rejects_wide_support_and_bad_p() {
        let wide = Symbol1D::smooth_bump(0.1, 4.0).unwrap();
        let opts = SpectralRunOptions::default();
        assert!(matches!(restriction_decay(&wide, 1.0, &[1, 2], 1, 1, &opts), Err(Error::SupportOutOfRange { .. })));
        assert!(restriction_decay(&bump(), 2.5, &[1, 2], 1, 1, &opts).is_err());
    }

    #[test]
    fn p_two_control_is_flat_and_bounded() {
        let r = restriction_decay(&bump(), 2.0, &[1, 2, 3, 4], 2, 1, &SpectralRunOptions::default()).unwrap();
        assert!(r.series.iter().all(|s| s.value <= 1.0 + 1e-12 && s.value > 0.99));
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.derive_verdict(), r.verdict);
    }

    #[test]
    fn p_one_norm_is_the_largest_column() {
        let opts = SpectralRunOptions::default();
        let g = band_truncate(&bump(), 2, DyadicBump::new());
        let (e, a) = spectral_opnorm(&g, 1, 1, 1.0, Domain::Whole, &opts).unwrap();
        for b in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            assert!(kernel_column_energy(&g, 1, 1, b, &opts.rule).unwrap().value.sqrt() <= e.value * (1.0 + 1e-12));
        }
        assert!((kernel_column_energy(&g, 1, 1, a, &opts.rule).unwrap().value.sqrt() - e.value).abs() < 1e-12);
    }

    #[test]
    fn probes_are_bounded_by_endpoint_norms() {
        // Riesz–Thorin does not apply to lower bounds, but every probe ratio at
        // p = 1 is at most the column supremum.
        let opts = SpectralRunOptions { trials: 8, ..SpectralRunOptions::default() };
        let g = band_truncate(&bump(), 2, DyadicBump::new());
        let (col, _) = spectral_opnorm(&g, 1, 1, 1.0, Domain::Whole, &opts).unwrap();
        let (sup, _) = spectral_opnorm(&g, 1, 1, 2.0, Domain::Whole, &opts).unwrap();
        let (mid, _) = spectral_opnorm(&g, 1, 1, 1.5, Domain::Whole, &opts).unwrap();
        assert_eq!(mid.method, NormMethod::RandomProbe);
        assert!(mid.value > 0.0);
        let more = spectral_opnorm(&g, 1, 1, 1.5, Domain::Whole, &SpectralRunOptions { trials: 16, ..opts }).unwrap().0;
        assert!(more.value >= mid.value);
        assert!(sup.value <= 1.0 + 1e-12 && col.value > 0.0);
    }

    #[test]
    fn out_of_hypothesis_runs_are_informational() {
        let r = restriction_decay(&bump(), 1.5, &[1, 2], 1, 1, &SpectralRunOptions { trials: 4, ..SpectralRunOptions::default() }).unwrap();
        assert!(!r.in_hypothesis);
        assert_eq!(r.verdict, Verdict::Informational);
        assert!(r.flags.iter().any(|f| f.contains("outside")));
    }

    #[test]
    fn away_rejects_large_balls() {
        let f = Symbol1D::smooth_bump(0.5, 2.0).unwrap();
        assert!(away_from_origin_gain(&f, 1.0, &[4.0, 8.0], 0.25, 1, 1, &SpectralRunOptions::default()).is_err());
    }

    #[test]
    fn stein_tomas_unit_symbol_at_two_is_at_most_one() {
        let f = Symbol1D::smooth_bump(0.0, 1.0).unwrap();
        let opts = SpectralRunOptions { trials: 6, ..SpectralRunOptions::default() };
        let ball = RadialBall { a_norm: 0.0, radius: 4.0 };
        let r = stein_tomas_condition(&f, &[0.5, 1.0], ball, 2.0, 1, 1, Some(1.0 + 1e-9), &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(stein_tomas_condition(&f, &[4.0], ball, 1.0, 1, 1, None, &opts).is_err());
        assert!(stein_tomas_condition(&bump(), &[0.5], ball, 1.0, 1, 1, None, &opts).is_err());
    }

    #[test]
    fn stein_tomas_rhs_scales_with_homogeneous_dimension() {
        let f = Symbol1D::smooth_bump(0.0, 1.0).unwrap();
        let opts = SpectralRunOptions::default();
        let ball = RadialBall { a_norm: 1.0, radius: 8.0 };
        let r = stein_tomas_condition(&f, &[0.5, 1.0], ball, 1.0, 1, 1, None, &opts).unwrap();
        let rhs: Vec<f64> = r.series.iter().map(|s| s.extra["rhs"]).collect();
        // Q = 3 and 1/p₀ − 1/2 = 1/2.
        assert!((rhs[0] / rhs[1] - 2f64.powf(1.5)).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Informational);
    }
}
