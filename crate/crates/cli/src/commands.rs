use std::io::Write;
use std::path::Path;

use grushin::calculus::io::{load_grid_function, save_grid_function};
use grushin::calculus::{apply_multiplier, ApplyOptions, GridFunction};
use grushin::estimates::{riesz_uniformity, Criterion, ExperimentReport, RieszOptions, SeriesPoint};
use grushin::geometry::{cc_distance, cover, CCPoint, CoverOptions, LayerBox};

use crate::output::{ensure_dir, export_csv, write_report};
use crate::symbols::parse_symbol;
use crate::{suites, ApplyArgs, CliError, Command, CoverArgs, GeodistArgs, Outcome, RieszArgs, RunConfig};

pub fn dispatch(command: &Command, config: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match command {
        Command::Apply(a) => apply(a, config, out),
        Command::Riesz(a) => riesz(a, config, out),
        Command::Geodist(a) => geodist(a, config, out),
        Command::Cover(a) => cover_box(a, out),
        Command::Verify { suite } => {
            let mut report = suites::run(suite, config)?;
            write_report(config, suite.name(), &mut report, out)?;
            Ok(outcome(&report))
        }
        Command::Export(a) => {
            let path = export_csv(&a.input, a.output.as_deref())?;
            let _ = writeln!(out, "{}", path.display());
            Ok(Outcome::Success)
        }
    }
}

pub fn outcome(report: &ExperimentReport) -> Outcome {
    match report.verdict {
        grushin::estimates::Verdict::Fail => Outcome::VerdictFail,
        _ => Outcome::Success,
    }
}

pub fn apply_options(config: &RunConfig) -> ApplyOptions {
    ApplyOptions { gram_tolerance: config.tolerances.resolution, tail_tolerance: None }
}

fn load(path: &Path) -> Result<GridFunction, CliError> {
    load_grid_function(path).map_err(|e| CliError::Input(format!("cannot read grid function {}: {e}", path.display())))
}

fn apply(a: &ApplyArgs, config: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let f = load(&a.input)?;
    let symbol = parse_symbol(&a.symbol)?;
    let applied = apply_multiplier(&symbol, &f, &apply_options(config))?;
    let target = match &a.output {
        Some(p) => p.clone(),
        None => {
            ensure_dir(&config.output_dir)?;
            config.output_dir.join("apply.grgf")
        }
    };
    save_grid_function(&target, &applied.function).map_err(|e| CliError::Input(format!("cannot write {}: {e}", target.display())))?;

    let mut report = ExperimentReport::new("apply");
    report.input("input", a.input.display().to_string());
    report.input("output", target.display().to_string());
    report.input("symbol", &a.symbol);
    report.input("grid", f.spec);
    report.input("planes", &applied.report.planes);
    report.input("tail_tolerance", config.tolerances.tail);
    report.push(SeriesPoint::new("relative-tail", 0.0, applied.report.relative_tail).with("input_norm", f.norm_l2()).with("output_norm", applied.function.norm_l2()));
    match config.tolerances.tail {
        Some(budget) => report.judge(Criterion::ValuesAtMost { budget }),
        None => report.judge(Criterion::None),
    };
    write_report(config, "apply", &mut report, out)?;
    Ok(outcome(&report))
}

fn riesz(a: &RieszArgs, config: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let corpus: Vec<(String, GridFunction)> = a.inputs.iter().map(|p| load(p).map(|f| (p.display().to_string(), f))).collect::<Result<_, _>>()?;
    let opts = RieszOptions { budget: config.tolerances.riesz_spread, apply: apply_options(config), ..RieszOptions::default() };
    let mut report = riesz_uniformity(a.delta, a.p, &a.t_list, &corpus, &opts)?;
    write_report(config, "riesz", &mut report, out)?;
    Ok(outcome(&report))
}

fn split_point(v: &[f64], config: &RunConfig, which: &str) -> Result<CCPoint, CliError> {
    if v.len() != config.d1 + config.d2 {
        return Err(CliError::Input(format!("--{which} needs d1 + d2 = {} coordinates, got {}", config.d1 + config.d2, v.len())));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(CliError::Input(format!("--{which} has a non-finite coordinate")));
    }
    Ok(CCPoint::new(v[..config.d1].to_vec(), v[config.d1..].to_vec()))
}

fn geodist(a: &GeodistArgs, config: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let z = split_point(&a.z, config, "z")?;
    let w = split_point(&a.w, config, "w")?;
    let _ = writeln!(out, "{}", cc_distance(&z, &w));
    Ok(Outcome::Success)
}

fn intervals(specs: &[String], which: &str) -> Result<Vec<(f64, f64)>, CliError> {
    specs
        .iter()
        .map(|s| {
            let parsed = s.split_once(':').and_then(|(lo, hi)| Some((lo.trim().parse::<f64>().ok()?, hi.trim().parse::<f64>().ok()?)));
            parsed.ok_or_else(|| CliError::Input(format!("--{which}: expected lo:hi, got {s:?}")))
        })
        .collect()
}

fn cover_box(a: &CoverArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let region = LayerBox::new(intervals(&a.x, "x")?, intervals(&a.y, "y")?)?;
    let c = cover(&region, a.radius, &a.lambdas, CoverOptions::default())?;
    let _ = writeln!(out, "cells {}", c.cells.len());
    for (lambda, count) in &c.overlaps {
        let _ = writeln!(out, "overlap {lambda} {count}");
    }
    Ok(Outcome::Success)
}
