//! Run configuration: TOML file, command-line overrides, environment overrides.

use std::path::{Path, PathBuf};

use grushin::calculus::GridSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const OUT_DIR_ENV: &str = "GRUSHIN_OUT_DIR";
pub const THREADS_ENV: &str = "GRUSHIN_THREADS";

/// Dyadic partitions of unity the library provides.
pub const BUMPS: &[&str] = &["smooth-dyadic"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_extent: f64,
    pub y_extent: f64,
    pub n_x: usize,
    pub n_y: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { x_extent: 10.0, y_extent: 4.0 * std::f64::consts::PI, n_x: 48, n_y: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed deviation of fitted exponents.
    pub exponent: f64,
    /// Largest Hermite Gram residual accepted by the Hermite suite.
    pub gram: f64,
    /// A Hermite order counts as resolved on the grid when its Gram matrix is this close to the identity.
    pub resolution: f64,
    /// Relative error allowed in the spectral Plancherel identity.
    pub plancherel: f64,
    /// Reject applications whose relevant truncation tail exceeds this.
    pub tail: Option<f64>,
    /// Leakage budget for finite propagation.
    pub leakage: f64,
    /// Allowed ratio spread for the Riesz scaling check.
    pub riesz_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { exponent: 0.2, gram: 1e-8, resolution: 1e-10, plancherel: 1e-8, tail: None, leakage: 1e-3, riesz_spread: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub d1: usize,
    pub d2: usize,
    pub grid: GridConfig,
    pub k_max: usize,
    pub bump: String,
    pub seed: u64,
    /// Random probes per norm estimate.
    pub trials: usize,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    /// Worker threads; `None` leaves the choice to the thread pool.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d1: 2,
            d2: 1,
            grid: GridConfig::default(),
            k_max: 24,
            bump: BUMPS[0].into(),
            seed: 0,
            trials: 32,
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("reports"),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("malformed config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `GRUSHIN_OUT_DIR` and `GRUSHIN_THREADS` from `env`.
    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        if let Some(dir) = env(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.output_dir = PathBuf::from(dir);
        }
        if let Some(t) = env(THREADS_ENV).filter(|t| !t.is_empty()) {
            let n: usize = t.trim().parse().map_err(|_| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got {t:?}")))?;
            self.threads = Some(n);
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let g = &self.grid;
        GridSpec::new(self.d1, self.d2, g.x_extent, g.y_extent, g.n_x, g.n_y, self.k_max).map_err(|e| CliError::Input(format!("invalid grid: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid_spec()?;
        if !BUMPS.contains(&self.bump.as_str()) {
            return Err(CliError::Input(format!("unknown bump {:?}; available: {}", self.bump, BUMPS.join(", "))));
        }
        if self.threads == Some(0) {
            return Err(CliError::Input("threads must be positive".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Input("trials must be positive".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [("exponent", t.exponent), ("gram", t.gram), ("resolution", t.resolution), ("plancherel", t.plancherel), ("leakage", t.leakage), ("riesz_spread", t.riesz_spread)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Input(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        if t.tail.is_some_and(|v| !(v > 0.0)) {
            return Err(CliError::Input("tolerance tail must be positive".into()));
        }
        Ok(())
    }
}
