use serde::{Deserialize, Serialize};

use super::report::{check_exponent, spread, Criterion, ExperimentReport, SeriesPoint};
use crate::calculus::{apply_multiplier, bochner_riesz, regrid_dilate, ApplyOptions, GridFunction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszOptions {
    /// Allowed `max/min − 1` of the ratios of one corpus member across `t`.
    pub budget: f64,
    /// A dilated member counts as clipped when this fraction of its `L²` mass
    /// sits in the outer tenth of the box.
    pub edge_tolerance: f64,
    pub apply: ApplyOptions,
}

impl Default for RieszOptions {
    fn default() -> Self {
        Self { budget: 0.05, edge_tolerance: 1e-6, apply: ApplyOptions::default() }
    }
}

fn edge_fraction(f: &GridFunction) -> f64 {
    let spec = f.spec;
    let (d1, d2) = (spec.d1, spec.d2);
    let mut x = vec![0.0; d1];
    let mut y = vec![0.0; d2];
    let (mut edge, mut total) = (0.0, 0.0);
    for (i, v) in f.values.iter().enumerate() {
        spec.coordinates(i, &mut x, &mut y);
        let m = v.norm_sqr();
        total += m;
        if x.iter().any(|c| c.abs() > 0.9 * spec.x_extent) || y.iter().any(|c| c.abs() > 0.9 * spec.y_extent) {
            edge += m;
        }
    }
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

/// `‖(1−tL)₊^δ f_t‖_p / ‖f_t‖_p` with `f_t = f ∘ δ_{1/√t}` for every corpus
/// member and every `t`. The ratios are dilation invariant, so each member's
/// spread across `t` measures the regridding and truncation error.
pub fn riesz_uniformity(delta: f64, p: f64, t_list: &[f64], corpus: &[(String, GridFunction)], opts: &RieszOptions) -> Result<ExperimentReport> {
    check_exponent(p)?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be nonnegative, got {delta}")));
    }
    if t_list.is_empty() || corpus.is_empty() {
        return Err(Error::InvalidArgument("empty t list or corpus".into()));
    }
    let mut report = ExperimentReport::new("riesz-uniformity");
    report.input("delta", delta);
    report.input("p", p);
    report.input("t_list", t_list);
    report.input("corpus", corpus.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>());
    report.input("grid", corpus[0].1.spec);
    report.input("options", opts);
    for (name, f) in corpus {
        for &t in t_list {
            let symbol = bochner_riesz(delta, t)?;
            let (ft, regrid) = regrid_dilate(1.0 / t.sqrt(), f)?;
            let source = ft.norm_lp(p);
            if source == 0.0 {
                return Err(Error::InvalidArgument(format!("corpus member {name} vanishes after dilation by t = {t}")));
            }
            let applied = apply_multiplier(&symbol, &ft, &opts.apply)?;
            let edge = edge_fraction(&ft);
            if edge > opts.edge_tolerance {
                report.flag(format!("{name} clipped by the box at t = {t} (edge fraction {edge:.2e})"));
            }
            let ratio = applied.function.norm_lp(p) / source;
            report.push(
                SeriesPoint::new(name.clone(), t, ratio)
                    .with("edge_fraction", edge)
                    .with("extrapolated", regrid.extrapolated as f64)
                    .with("relative_tail", applied.report.relative_tail),
            );
        }
    }
    let worst = corpus
        .iter()
        .map(|(name, _)| spread(report.series.iter().filter(|q| &q.group == name).map(|q| q.value)))
        .fold(0.0, f64::max);
    report.input("max_spread", worst);
    report.judge(Criterion::SpreadAtMost { budget: opts.budget });
    Ok(report)
}
