use std::io::Write;
use std::path::{Path, PathBuf};

use grushin::estimates::ExperimentReport;

use crate::{CliError, RunConfig};

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create output directory {}: {e}", dir.display())))
}

/// Embeds the resolved configuration, writes `<stem>.json` and `<stem>.csv` into
/// the output directory and prints a one-line summary.
pub fn write_report(config: &RunConfig, stem: &str, report: &mut ExperimentReport, out: &mut dyn Write) -> Result<PathBuf, CliError> {
    report.input("config", config);
    ensure_dir(&config.output_dir)?;
    let json = config.output_dir.join(format!("{stem}.json"));
    write_file(&json, report.to_json()?.as_bytes())?;
    write_file(&config.output_dir.join(format!("{stem}.csv")), report.to_csv().as_bytes())?;
    let verdict = serde_json::to_value(report.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let fit = report.fit.as_ref().map(|f| format!(" exponent {:.4}", f.exponent)).unwrap_or_default();
    let _ = writeln!(out, "{} {verdict}{fit} -> {}", report.experiment, json.display());
    for flag in &report.flags {
        let _ = writeln!(out, "  flag: {flag}");
    }
    Ok(json)
}

pub fn export_csv(input: &Path, output: Option<&Path>) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::Input(format!("cannot read report {}: {e}", input.display())))?;
    let report = ExperimentReport::from_json(&text).map_err(|e| CliError::Input(format!("malformed report {}: {e}", input.display())))?;
    let target = output.map(Path::to_path_buf).unwrap_or_else(|| input.with_extension("csv"));
    write_file(&target, report.to_csv().as_bytes())?;
    Ok(target)
}
