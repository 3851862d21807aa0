//! Symbol specifications: `name` or `name:key=value,...`.
//!
//! | preset          | parameters                      | symbol                         |
//! |-----------------|---------------------------------|--------------------------------|
//! | `bochner-riesz` | `delta`, `t` (default 1)        | `λ ↦ (1 − tλ²)₊^δ`             |
//! | `bump`          | `lo`, `hi` (default 0.5, 2)     | smooth bump supported in `[lo, hi]` |
//! | `indicator`     | `lo`, `hi`                      | `1[lo ≤ λ ≤ hi]`               |
//! | `cosine`        | `t`                             | `λ ↦ cos(tλ)`                  |
//! | `table`         | `path`                          | sampled table, see below       |
//!
//! A table is a text file of `λ,re[,im]` rows on an equally spaced `λ` grid,
//! linearly interpolated in between and zero outside. Blank lines, lines
//! starting with `#` and a non-numeric header row are skipped.

use std::collections::BTreeMap;
use std::path::Path;

use grushin::calculus::{bochner_riesz, cosine_symbol, Symbol1D};
use num_complex::Complex64;

use crate::CliError;

pub const PRESETS: &[&str] = &["bochner-riesz", "bump", "indicator", "cosine", "table"];

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

struct Params<'a> {
    preset: &'a str,
    values: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn parse(spec: &'a str) -> Result<Self, CliError> {
        let (preset, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let preset = preset.trim();
        let mut values = BTreeMap::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| bad(format!("symbol parameter {part:?} is not key=value")))?;
            if values.insert(k.trim(), v.trim()).is_some() {
                return Err(bad(format!("symbol parameter {:?} given twice", k.trim())));
            }
        }
        Ok(Self { preset, values })
    }

    fn number(&self, key: &str, default: Option<f64>) -> Result<f64, CliError> {
        match self.values.get(key) {
            Some(v) => v.parse().map_err(|_| bad(format!("{}: parameter {key} = {v:?} is not a number", self.preset))),
            None => default.ok_or_else(|| bad(format!("{}: missing parameter {key}", self.preset))),
        }
    }

    fn only(&self, allowed: &[&str]) -> Result<(), CliError> {
        match self.values.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(bad(format!("{}: unknown parameter {k}", self.preset))),
            None => Ok(()),
        }
    }
}

pub fn parse_symbol(spec: &str) -> Result<Symbol1D, CliError> {
    let p = Params::parse(spec)?;
    let lib = |e: grushin::Error| bad(format!("{}: {e}", p.preset));
    match p.preset {
        "bochner-riesz" => {
            p.only(&["delta", "t"])?;
            bochner_riesz(p.number("delta", None)?, p.number("t", Some(1.0))?).map_err(lib)
        }
        "bump" => {
            p.only(&["lo", "hi"])?;
            Symbol1D::smooth_bump(p.number("lo", Some(0.5))?, p.number("hi", Some(2.0))?).map_err(lib)
        }
        "indicator" => {
            p.only(&["lo", "hi"])?;
            Symbol1D::indicator(p.number("lo", None)?, p.number("hi", None)?).map_err(lib)
        }
        "cosine" => {
            p.only(&["t"])?;
            let t = p.number("t", None)?;
            if !t.is_finite() {
                return Err(bad("cosine: t must be finite"));
            }
            Ok(cosine_symbol(t))
        }
        "table" => {
            p.only(&["path"])?;
            let path = p.values.get("path").ok_or_else(|| bad("table: missing parameter path"))?;
            load_table(Path::new(path))
        }
        other => Err(bad(format!("unknown symbol preset {other:?}; available: {}", PRESETS.join(", ")))),
    }
}

pub fn load_table(path: &Path) -> Result<Symbol1D, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read symbol table {}: {e}", path.display())))?;
    parse_table(&path.display().to_string(), &text)
}

pub fn parse_table(name: &str, text: &str) -> Result<Symbol1D, CliError> {
    let mut rows: Vec<(f64, Complex64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let nums: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let Ok(nums) = nums else {
            if rows.is_empty() {
                continue;
            }
            return Err(bad(format!("{name}:{}: non-numeric row", lineno + 1)));
        };
        match nums.as_slice() {
            [l, re] => rows.push((*l, Complex64::new(*re, 0.0))),
            [l, re, im] => rows.push((*l, Complex64::new(*re, *im))),
            _ => return Err(bad(format!("{name}:{}: expected 2 or 3 columns", lineno + 1))),
        }
    }
    if rows.len() < 2 {
        return Err(bad(format!("{name}: a table needs at least 2 rows")));
    }
    let (lo, hi) = (rows[0].0, rows[rows.len() - 1].0);
    let step = (hi - lo) / (rows.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(bad(format!("{name}: λ must increase")));
    }
    for (i, (l, _)) in rows.iter().enumerate() {
        if (l - (lo + i as f64 * step)).abs() > 1e-9 * step.max(hi.abs()) {
            return Err(bad(format!("{name}: λ values must be equally spaced (row {})", i + 1)));
        }
    }
    Symbol1D::sampled(format!("table({name})"), lo, hi, rows.into_iter().map(|r| r.1).collect()).map_err(|e| bad(format!("{name}: {e}")))
}
