//! Acceptance criteria AC1–AC9. Each test writes one `ACn PASS|FAIL ...` line to
//! stdout directly, so the verdicts appear even when libtest captures output.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use grushin::calculus::{
    apply_joint, apply_multiplier, band_truncate, eigen_energies, fourier_y, ApplyOptions, DyadicBump, GridFunction, GridSpec,
    Symbol1D,
};
use grushin::estimates::{
    away_from_origin_gain, fit_exponent, hermite_bound_scan, propagation_refinement, ray_samples, restriction_decay, riesz_uniformity,
    truncated_gaussian, weighted_plancherel, ExponentialFit, HermiteScanOptions, PlancherelOptions, PropagationOptions, RieszOptions,
    SpectralRunOptions, Verdict,
};
use grushin::geometry::{ball_volume, cc_distance, cover, dilate, homogeneous_dimension, y_slab_decompose, CCPoint, CoverOptions, LayerBox};
use grushin::hermite::{bracket, diag_kernel, eigen_residual, eigenspace_dim, gram_residual, multi_indices, EigenIndex, HermiteEvalPlan};

fn verdict(id: &str, pass: bool, detail: &str) {
    let line = format!("{id} {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "{}", line.trim_end());
}

fn slope(report: &grushin::estimates::ExperimentReport) -> f64 {
    report.fit.as_ref().map_or(f64::NAN, |f| f.exponent)
}

#[test]
fn ac1_hermite_suite() {
    let start = Instant::now();
    let (d1, k_max, r) = (2, 12, 1.0);
    let plan = HermiteEvalPlan::for_scale(d1, k_max, r, 96).unwrap();
    let gram = gram_residual(&plan, r).unwrap();

    let half = plan.half_width();
    let sizes = [48, 96, 192];
    let modes: Vec<_> = [0, 5, 12].iter().flat_map(|&k| multi_indices(d1, k)).collect();
    let mut worst_gain = f64::INFINITY;
    for nu in &modes {
        let res: Vec<f64> = sizes.iter().map(|&n| eigen_residual(nu, r, &HermiteEvalPlan::new(d1, k_max, half, n).unwrap()).unwrap()).collect();
        for w in res.windows(2) {
            worst_gain = worst_gain.min(w[0] / w[1]);
        }
    }

    let mut trace_err: f64 = 0.0;
    let mut x = [0.0; 2];
    for k in 0..=k_max {
        let ki = EigenIndex::new(k, d1).unwrap();
        let mut tr = 0.0;
        for i in 0..plan.grid_len() {
            plan.point(i, &mut x);
            tr += diag_kernel(ki, r, &x).unwrap();
        }
        tr *= plan.cell_volume();
        let dim = eigenspace_dim(k, d1) as f64;
        trace_err = trace_err.max((tr - dim).abs() / dim);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = gram <= 1e-8 && worst_gain >= 4.0 && trace_err <= 1e-6 && secs <= 30.0;
    verdict(
        "AC1",
        pass,
        &format!("gram {gram:.2e} (<= 1e-8), min residual gain per doubling {worst_gain:.1} (>= 4), trace {trace_err:.2e} (<= 1e-6), {secs:.1}s"),
    );
}

#[test]
fn ac2_joint_calculus_suite() {
    let spec = GridSpec::new(1, 1, 10.0, 8.0 * PI, 64, 64, 32).unwrap();
    // odd in y, so the η = 0 plane, which band truncations do not see, carries nothing
    let f = GridFunction::from_fn(spec, |x, y| {
        let r2 = x[0] * x[0];
        Complex64::new(y[0] * (-r2 / 2.0 - y[0] * y[0]).exp(), 0.3 * x[0] * y[0] * (-r2 - y[0] * y[0] / 2.0).exp())
    });
    let opts = ApplyOptions::default();
    let sym = Symbol1D::smooth_bump(0.5, 6.0).unwrap();
    let bump = DyadicBump::new();
    let levels: Vec<i32> = (0..=8).collect();
    let energies = eigen_energies(&fourier_y(&f), &opts);

    let mut plancherel: f64 = 0.0;
    let mut bands = Vec::new();
    for &l in &levels {
        let g = band_truncate(&sym, l, bump);
        let out = apply_joint(&g, &f, &opts).unwrap();
        let lhs = out.function.norm_l2().powi(2);
        let rhs: f64 = energies
            .iter()
            .map(|pe| pe.energies.iter().enumerate().map(|(k, e)| g.eval(bracket(k, 1) * pe.eta_norm, pe.eta_norm).norm_sqr() * e).sum::<f64>())
            .sum::<f64>()
            * spec.d_eta()
            / (2.0 * PI);
        if rhs > 0.0 {
            plancherel = plancherel.max((lhs - rhs).abs() / rhs);
        }
        bands.push(out);
    }

    let whole = apply_multiplier(&sym, &f, &opts).unwrap();
    let mut sum = GridFunction::zeros(spec);
    for b in &bands {
        sum = sum.combine(Complex64::new(1.0, 0.0), &b.function, Complex64::new(1.0, 0.0)).unwrap();
    }
    let recon = sum.sub(&whole.function).unwrap().norm_l2() / f.norm_l2();
    let budget = whole.report.relative_tail + 1e-10;

    let mut disjoint: f64 = 0.0;
    for (i, &l) in levels.iter().enumerate() {
        for &m in &levels {
            if (l - m).abs() >= 2 {
                let twice = apply_joint(&band_truncate(&sym, m, bump), &bands[i].function, &opts).unwrap().function;
                disjoint = disjoint.max(twice.norm_l2() / f.norm_l2());
            }
        }
    }
    let pass = plancherel <= 1e-8 && recon <= budget && disjoint < 1e-10;
    verdict(
        "AC2",
        pass,
        &format!("plancherel {plancherel:.2e} (<= 1e-8), reconstruction {recon:.2e} (<= tail budget {budget:.2e}), band overlap {disjoint:.2e} (< 1e-10)"),
    );
}

#[test]
fn ac3_restriction_decay() {
    let f = Symbol1D::smooth_bump(0.25, 4.0).unwrap();
    let levels: Vec<i32> = (1..=5).collect();
    let opts = SpectralRunOptions::default();
    let start = Instant::now();
    let p1 = restriction_decay(&f, 1.0, &levels, 2, 2, &opts).unwrap();
    let p2 = restriction_decay(&f, 2.0, &levels, 2, 2, &opts).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (s1, s2) = (slope(&p1), slope(&p2));
    let pass = s1 <= -0.8 && (-0.1..=0.1).contains(&s2) && secs <= 600.0;
    verdict("AC3", pass, &format!("p = 1 slope {s1:.3} (<= -0.8), p = 2 slope {s2:.3} (in [-0.1, 0.1]), {secs:.1}s"));
}

#[test]
fn ac4_weighted_plancherel() {
    let h = Symbol1D::smooth_bump(0.5, 2.0).unwrap();
    let center = CCPoint::origin(2, 1);
    let opts = PlancherelOptions::default();
    let levels: Vec<i32> = (1..=5).collect();
    let far: Vec<i32> = (5..=9).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [0usize, 1] {
        let predicted = 2.0 * n as f64 - 1.0;
        let r = weighted_plancherel(&h, &levels, n, &center, &opts).unwrap();
        let s = slope(&r);
        pass &= (s - predicted).abs() <= 0.3;
        let asymptotic = slope(&weighted_plancherel(&h, &far, n, &center, &opts).unwrap());
        detail.push(format!("N = {n}: slope {s:.3} (target {predicted} ± 0.3; levels 5..9 give {asymptotic:.3})"));
    }
    verdict("AC4", pass, &detail.join(", "));
}

#[test]
fn ac5_finite_propagation() {
    let y = 2.0 * PI;
    let grids = [
        GridSpec::new(1, 1, 16.0, y, 128, 32, 48).unwrap(),
        GridSpec::new(1, 1, 20.0, y, 256, 64, 96).unwrap(),
        GridSpec::new(1, 1, 24.0, y, 512, 64, 160).unwrap(),
    ];
    let opts = PropagationOptions::default();
    let r = propagation_refinement(0.5, 0.5, &grids, |s| truncated_gaussian(s, 0.5, 1e-8), &opts).unwrap();
    let values: Vec<String> = r.series.iter().map(|p| format!("{:.2e}", p.value)).collect();
    let pass = r.verdict == Verdict::Pass && r.flags.is_empty();
    verdict("AC5", pass, &format!("leakage at ε = 0.5 under refinement [{}] (decreasing, final <= {:.0e}), flags {:?}", values.join(", "), opts.budget, r.flags));
}

#[test]
fn ac6_hermite_pointwise_bounds() {
    let ks: Vec<usize> = (0..=19).collect();
    let x = ray_samples(2, 14.0, 281);
    let r = hermite_bound_scan(2, &ks, &[0.5, 1.0, 2.0], &x, &HermiteScanOptions::default()).unwrap();
    let s = slope(&r);
    let stable = r.inputs["exponential_stable"].as_bool().unwrap_or(false);
    let fit: Option<ExponentialFit> = serde_json::from_value(r.inputs["exponential_fit"].clone()).ok();
    let lower: Option<ExponentialFit> = serde_json::from_value(r.inputs["exponential_fit_lower_half"].clone()).ok().flatten();
    let upper: Option<ExponentialFit> = serde_json::from_value(r.inputs["exponential_fit_upper_half"].clone()).ok().flatten();
    let pass = s.abs() <= 0.2 && stable && fit.is_some();
    let exp = match (fit, lower, upper) {
        (Some(f), Some(a), Some(b)) => format!("c = {:.3} (halves {:.3} / {:.3}), residual {:.3}", f.c, a.c, b.c, f.residual),
        _ => "no exponential fit".into(),
    };
    verdict("AC6", pass, &format!("[k]-exponent {s:.3} (0 ± 0.2), {exp}, stable {stable}"));
}

#[test]
fn ac7_riesz_uniformity() {
    let profile = |y: f64| {
        let y2 = y * y / 16.0;
        (16.0 * y2 * y2 - 48.0 * y2 + 12.0) * (-y2).exp()
    };
    let opts = RieszOptions::default();
    let mut spreads = Vec::new();
    let mut pass = true;
    for ny in [1024, 2048] {
        let spec = GridSpec::new(1, 1, 32.0, 128.0, 320, ny, 128).unwrap();
        let f = GridFunction::from_fn(spec, |x, y| Complex64::new((-x[0] * x[0] / 4.0).exp() * profile(y[0]), 0.0));
        let g = GridFunction::from_fn(spec, |x, y| Complex64::from_polar((-(x[0] - 1.0).powi(2) / 4.0).exp() * profile(y[0] + 2.0), 0.5 * x[0]));
        let r = riesz_uniformity(5.0, 1.0, &[0.25, 1.0, 4.0], &[("centered".into(), f), ("shifted".into(), g)], &opts).unwrap();
        pass &= r.verdict == Verdict::Pass && r.flags.is_empty();
        spreads.push(r.inputs["max_spread"].as_f64().unwrap());
    }
    pass &= spreads.windows(2).all(|w| w[1] < w[0]);
    verdict("AC7", pass, &format!("max ratio spread over t in {{1/4, 1, 4}} by n_y = 1024, 2048: {:.2e}, {:.2e} (budget {}, shrinking)", spreads[0], spreads[1], opts.budget));
}

#[test]
fn ac8_geometry_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut homogeneity: f64 = 0.0;
    for _ in 0..10_000 {
        let d1 = rng.gen_range(1..=3);
        let d2 = rng.gen_range(1..=3);
        let mut pt = |s: f64| CCPoint::new((0..d1).map(|_| rng.gen_range(-s..s)).collect(), (0..d2).map(|_| rng.gen_range(-s * s..s * s)).collect());
        let (z, w) = (pt(4.0), pt(4.0));
        let t = 2f64.powf(rng.gen_range(-6.0..6.0));
        let base = cc_distance(&z, &w);
        let scaled = cc_distance(&dilate(t, &z).unwrap(), &dilate(t, &w).unwrap());
        if base > 0.0 {
            homogeneity = homogeneity.max((scaled - t * base).abs() / (t * base));
        }
    }

    let mut doubling_ok = true;
    for _ in 0..1000 {
        let d1 = rng.gen_range(1..=3);
        let d2 = rng.gen_range(1..=3);
        let radius = 2f64.powf(rng.gen_range(-8.0..8.0));
        let a: Vec<f64> = (0..d1).map(|_| rng.gen_range(-1.0..1.0) * 2f64.powf(rng.gen_range(-8.0..8.0))).collect();
        let ratio = ball_volume(2.0 * radius, &a, d2).unwrap() / ball_volume(radius, &a, d2).unwrap();
        let (d, q) = ((d1 + d2) as i32, homogeneous_dimension(d1, d2) as i32);
        doubling_ok &= ratio >= 2f64.powi(d) * (1.0 - 1e-12) && ratio <= 2f64.powi(q) * (1.0 + 1e-12);
    }

    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for d2 in [1usize, 2] {
        for iota in 1..=4 {
            let radius = 2f64.powi(iota);
            let extent = 4.0 * radius * radius;
            let region = LayerBox::new(vec![(-4.0 * radius, 4.0 * radius)], vec![(-extent, extent); d2]).unwrap();
            let c = cover(&region, radius, &[], CoverOptions::default()).unwrap();
            let cell = c.cells.iter().find(|c| c.center.x[0].abs() <= 4.0 * radius).unwrap();
            for level in 0..=iota {
                let n = y_slab_decompose(cell, level, iota, 9.0).unwrap().len() as f64;
                let c = n / 2f64.powi((iota - level) * d2 as i32);
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
    }
    let slab_ok = hi / lo <= 64.0;
    let pass = homogeneity <= 1e-12 && doubling_ok && slab_ok;
    verdict(
        "AC8",
        pass,
        &format!("homogeneity {homogeneity:.2e} (<= 1e-12), doubling ratios in [2^d, 2^Q] {doubling_ok}, slab count / 2^((ι-ℓ)d₂) in [{lo:.3}, {hi:.3}]"),
    );
}

#[test]
fn ac9_away_from_origin_gain() {
    let f = Symbol1D::smooth_bump(0.5, 2.0).unwrap();
    let r = away_from_origin_gain(&f, 1.0, &[4.0, 8.0, 16.0], 0.125, 2, 1, &SpectralRunOptions::default()).unwrap();
    let s = slope(&r);
    let points: Vec<(f64, f64)> = r.series.iter().map(|p| (p.scale, p.value)).collect();
    let refit = fit_exponent(&points).unwrap();
    let pass = s <= -0.3 && (refit.exponent - s).abs() < 1e-12;
    verdict("AC9", pass, &format!("|a|-exponent {s:.3} (<= -0.3), residual {:.2e}, flags {:?}", refit.residual, r.flags));
}
