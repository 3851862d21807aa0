//! The `verify` suites. Checks with several thresholds report each measurement
//! relative to its threshold, so a value ≤ 1 passes.

use std::f64::consts::PI;

use grushin::calculus::{apply_joint, apply_multiplier, band_truncate, eigen_energies, fourier_y, DyadicBump, GridFunction, GridSpec};
use grushin::estimates::{
    propagation_leakage, restriction_decay, restriction_tail_decay, riesz_uniformity, stein_tomas_condition, truncated_gaussian,
    weighted_plancherel, Criterion, ExperimentReport, PlancherelOptions, PropagationOptions, RadialBall, RieszOptions, SeriesPoint,
    SpectralRunOptions,
};
use grushin::geometry::CCPoint;
use grushin::hermite::{bracket, diag_kernels, eigen_residual, eigenspace_dim, gram_residual, multi_indices, HermiteEvalPlan};
use num_complex::Complex64;

use crate::commands::apply_options;
use crate::symbols::parse_symbol;
use crate::{CliError, RunConfig, Suite};

/// Smallest accepted reduction of the eigen-residual per grid doubling.
const MIN_RESIDUAL_GAIN: f64 = 4.0;
/// Relative error allowed in the trace identity.
const TRACE_TOLERANCE: f64 = 1e-6;
/// Norm allowed for products of bands at least two levels apart.
const BAND_OVERLAP_TOLERANCE: f64 = 1e-10;

pub fn run(suite: &Suite, config: &RunConfig) -> Result<ExperimentReport, CliError> {
    let mut report = match suite {
        Suite::Hermite { r, points } => hermite(config, *r, *points)?,
        Suite::Plancherel { symbol, lmax } => plancherel(config, symbol, *lmax)?,
        Suite::Restriction { p, lmin, lmax, symbol, tail } => {
            let f = parse_symbol(symbol)?;
            let levels = level_range(*lmin, *lmax)?;
            let opts = spectral_options(config);
            let mut r = if *tail {
                restriction_tail_decay(&f, *p, &levels, config.d1, config.d2, &opts)?
            } else {
                restriction_decay(&f, *p, &levels, config.d1, config.d2, &opts)?
            };
            r.input("symbol_spec", symbol);
            r
        }
        Suite::WeightedPlancherel { order, lmin, lmax, symbol, a } => {
            let h = parse_symbol(symbol)?;
            let mut x = vec![0.0; config.d1];
            x[0] = *a;
            let center = CCPoint::new(x, vec![0.0; config.d2]);
            let opts = PlancherelOptions { tolerance: config.tolerances.exponent, ..PlancherelOptions::default() };
            let mut r = weighted_plancherel(&h, &level_range(*lmin, *lmax)?, *order, &center, &opts)?;
            r.input("symbol_spec", symbol);
            r
        }
        Suite::Propagation { t, sigma, cutoff, margins } => {
            let spec = config.grid_spec()?;
            let f = truncated_gaussian(spec, *sigma, *cutoff);
            let opts = PropagationOptions { budget: config.tolerances.leakage, apply: apply_options(config), ..PropagationOptions::default() };
            let mut r = propagation_leakage(*t, &f, margins, &opts)?;
            r.input("sigma", sigma);
            r.input("cutoff", cutoff);
            r
        }
        Suite::Riesz { delta, p, t_list } => {
            let spec = config.grid_spec()?;
            let opts = RieszOptions { budget: config.tolerances.riesz_spread, apply: apply_options(config), ..RieszOptions::default() };
            riesz_uniformity(*delta, *p, t_list, &riesz_corpus(spec), &opts)?
        }
        Suite::SteinTomas { symbol, t_list, a, radius, p0, constant } => {
            let f = parse_symbol(symbol)?;
            let ball = RadialBall { a_norm: *a, radius: *radius };
            let mut r = stein_tomas_condition(&f, t_list, ball, *p0, config.d1, config.d2, *constant, &spectral_options(config))?;
            r.input("symbol_spec", symbol);
            r
        }
    };
    report.input("suite", suite.name());
    Ok(report)
}

fn level_range(lmin: i32, lmax: i32) -> Result<Vec<i32>, CliError> {
    if lmin > lmax {
        return Err(CliError::Input(format!("empty level range {lmin}..={lmax}")));
    }
    Ok((lmin..=lmax).collect())
}

fn spectral_options(config: &RunConfig) -> SpectralRunOptions {
    SpectralRunOptions { trials: config.trials, seed: config.seed, tolerance: config.tolerances.exponent, ..SpectralRunOptions::default() }
}

fn checked(group: &str, scale: f64, measured: f64, threshold: f64) -> SeriesPoint {
    SeriesPoint::new(group, scale, measured / threshold).with("measured", measured).with("threshold", threshold)
}

fn hermite(config: &RunConfig, r: f64, points: usize) -> Result<ExperimentReport, CliError> {
    let (d1, k_max) = (config.d1, config.k_max);
    if points < 8 {
        return Err(CliError::Input("the hermite suite needs at least 8 points per axis".into()));
    }
    let plan = HermiteEvalPlan::for_scale(d1, k_max, r, points)?;
    let mut report = ExperimentReport::new("hermite-suite");
    report.input("d1", d1);
    report.input("k_max", k_max);
    report.input("r", r);
    report.input("points", points);
    report.input("half_width", plan.half_width());

    let gram = gram_residual(&plan, r)?;
    report.push(checked("gram-residual", k_max as f64, gram, config.tolerances.gram));

    let sizes = [points / 2, points, 2 * points];
    let plans: Vec<HermiteEvalPlan> = sizes.iter().map(|&n| HermiteEvalPlan::new(d1, k_max, plan.half_width(), n)).collect::<Result<_, _>>()?;
    for k in [0, k_max / 2, k_max] {
        let modes = multi_indices(d1, k);
        let picks = [0, modes.len() / 2, modes.len() - 1];
        for &i in picks.iter().take(modes.len().min(3)) {
            let nu = &modes[i];
            let res: Vec<f64> = plans.iter().map(|p| eigen_residual(nu, r, p)).collect::<Result<_, _>>()?;
            let gain = (res[0] / res[1]).min(res[1] / res[2]);
            report.push(
                SeriesPoint::new("eigen-residual-gain", k as f64, MIN_RESIDUAL_GAIN / gain)
                    .with("gain", gain)
                    .with("coarse", res[0])
                    .with("middle", res[1])
                    .with("fine", res[2])
                    .with("mode", i as f64),
            );
        }
    }

    let mut traces = vec![0.0; k_max + 1];
    let mut x = vec![0.0; d1];
    for i in 0..plan.grid_len() {
        plan.point(i, &mut x);
        for (t, h) in traces.iter_mut().zip(diag_kernels(k_max, r, &x)?) {
            *t += h;
        }
    }
    for (k, t) in traces.iter().enumerate() {
        let dim = eigenspace_dim(k, d1) as f64;
        report.push(checked("trace", k as f64, (t * plan.cell_volume() - dim).abs() / dim, TRACE_TOLERANCE));
    }
    report.judge(Criterion::ValuesAtMost { budget: 1.0 });
    Ok(report)
}

/// Smooth test function whose `y` profile is odd, so it has no `η = 0` component.
fn odd_blob(spec: GridSpec) -> GridFunction {
    let (sx, sy) = (spec.x_extent / 10.0, spec.y_extent / 8.0);
    GridFunction::from_fn(spec, |x, y| {
        let r2: f64 = x.iter().map(|v| (v / sx).powi(2)).sum();
        let q2: f64 = y.iter().map(|v| (v / sy).powi(2)).sum();
        let odd: f64 = y.iter().map(|v| v / sy).product();
        Complex64::new(odd * (-r2 / 2.0 - q2).exp(), 0.3 * x[0] / sx * odd * (-r2 - q2 / 2.0).exp())
    })
}

fn plancherel(config: &RunConfig, symbol: &str, lmax: i32) -> Result<ExperimentReport, CliError> {
    let spec = config.grid_spec()?;
    let sym = parse_symbol(symbol)?;
    if lmax < 0 {
        return Err(CliError::Input("lmax must be nonnegative".into()));
    }
    let f = odd_blob(spec);
    let opts = apply_options(config);
    let bump = DyadicBump::new();
    let energies = eigen_energies(&fourier_y(&f), &opts);
    let norm = f.norm_l2();
    let mut report = ExperimentReport::new("plancherel-suite");
    report.input("grid", spec);
    report.input("symbol_spec", symbol);
    report.input("levels", (0..=lmax).collect::<Vec<_>>());

    let mut bands = Vec::new();
    for l in 0..=lmax {
        let g = band_truncate(&sym, l, bump);
        let applied = apply_joint(&g, &f, &opts)?;
        let lhs = applied.function.norm_l2().powi(2);
        let rhs: f64 = energies
            .iter()
            .map(|pe| {
                pe.energies.iter().enumerate().map(|(k, e)| g.eval(bracket(k, spec.d1) * pe.eta_norm, pe.eta_norm).norm_sqr() * e).sum::<f64>()
            })
            .sum::<f64>()
            * (spec.d_eta() / (2.0 * PI)).powi(spec.d2 as i32);
        let err = if rhs > 0.0 { (lhs - rhs).abs() / rhs } else { lhs.sqrt() / norm };
        report.push(checked("plancherel", l as f64, err, config.tolerances.plancherel).with("band_energy", lhs));
        bands.push(applied.function);
    }

    let whole = apply_multiplier(&sym, &f, &opts)?;
    let mut sum = GridFunction::zeros(spec);
    for b in &bands {
        sum = sum.combine(Complex64::new(1.0, 0.0), b, Complex64::new(1.0, 0.0))?;
    }
    let recon = sum.sub(&whole.function)?.norm_l2() / norm;
    report.push(checked("reconstruction", lmax as f64, recon, whole.report.relative_tail + 1e-10).with("relative_tail", whole.report.relative_tail));

    for (i, band) in bands.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for m in 0..=lmax {
            if (m - i as i32).abs() >= 2 {
                let twice = apply_joint(&band_truncate(&sym, m, bump), band, &opts)?.function;
                worst = worst.max(twice.norm_l2() / norm);
            }
        }
        report.push(checked("band-overlap", i as f64, worst, BAND_OVERLAP_TOLERANCE));
    }
    report.judge(Criterion::ValuesAtMost { budget: 1.0 });
    Ok(report)
}

/// Two smooth members sized to the grid: a centered Gaussian in `x` times a
/// fourth-derivative-of-Gaussian profile in `y`, and a shifted, modulated copy.
/// The profile vanishes to high order at `η = 0`.
fn riesz_corpus(spec: GridSpec) -> Vec<(String, GridFunction)> {
    let (sx, sy) = (spec.x_extent / 16.0, spec.y_extent / 32.0);
    let profile = |y: &[f64], shift: f64| -> f64 {
        y.iter()
            .map(|v| {
                let u2 = ((v + shift) / sy).powi(2);
                (16.0 * u2 * u2 - 48.0 * u2 + 12.0) * (-u2).exp()
            })
            .product()
    };
    let centered = GridFunction::from_fn(spec, |x, y| {
        let r2: f64 = x.iter().map(|v| (v / sx).powi(2)).sum();
        Complex64::new((-r2).exp() * profile(y, 0.0), 0.0)
    });
    let shifted = GridFunction::from_fn(spec, |x, y| {
        let r2: f64 = x.iter().enumerate().map(|(i, v)| ((v - if i == 0 { sx / 2.0 } else { 0.0 }) / sx).powi(2)).sum();
        Complex64::from_polar((-r2).exp() * profile(y, sy / 2.0), x[0] / sx)
    });
    vec![("centered".into(), centered), ("shifted".into(), shifted)]
}
