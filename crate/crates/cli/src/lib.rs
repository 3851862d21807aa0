//! Command-line front end: argument parsing, configuration resolution, dispatch,
//! report output and exit codes (0 success, 2 verdict FAIL, 1 usage or input error).

pub mod config;
mod commands;
mod output;
mod suites;
pub mod symbols;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Library(grushin::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) => f.write_str(m),
            CliError::Library(e) => write!(f, "{e}"),
        }
    }
}

impl From<grushin::Error> for CliError {
    fn from(e: grushin::Error) -> Self {
        CliError::Library(e)
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    VerdictFail,
}

#[derive(Debug, Parser)]
#[command(name = "grushin", version, about = "Spectral calculus of the Grushin operator and its estimate harness")]
pub struct Cli {
    /// TOML file mirroring the run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for reports and outputs [env: GRUSHIN_OUT_DIR].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads [env: GRUSHIN_THREADS].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub d1: Option<usize>,
    #[arg(long, global = true)]
    pub d2: Option<usize>,
    #[arg(long = "kmax", global = true)]
    pub k_max: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply a spectral multiplier F(√L) to a stored grid function.
    Apply(ApplyArgs),
    /// Scale uniformity of Bochner–Riesz means on stored grid functions.
    Riesz(RieszArgs),
    /// Carnot–Carathéodory distance between two points.
    Geodist(GeodistArgs),
    /// Cover a box by balls of one radius and report the overlap.
    Cover(CoverArgs),
    /// Run a verification suite and write its report.
    Verify {
        #[command(subcommand)]
        suite: Suite,
    },
    /// Convert a JSON report to CSV.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Symbol spec, e.g. `bochner-riesz:delta=2,t=0.5` or `table:path=f.csv`.
    #[arg(long)]
    pub symbol: String,
    /// Result file; defaults to `apply.grgf` in the output directory.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RieszArgs {
    /// Corpus members; repeat for several.
    #[arg(long = "input", value_name = "FILE", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long = "t", value_delimiter = ',', default_values_t = vec![0.25, 1.0, 4.0])]
    pub t_list: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct GeodistArgs {
    /// First point, `x_1,…,x_d1,y_1,…,y_d2`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub z: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub w: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    /// First-layer box, one `lo:hi` per axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<String>,
    /// Second-layer box, one `lo:hi` per axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub y: Vec<String>,
    #[arg(long)]
    pub radius: f64,
    /// Dilation factors whose overlap counts are certified.
    #[arg(long = "lambda", value_delimiter = ',')]
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Defaults to the input path with a `.csv` extension.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Suite {
    /// Gram residual, eigen-residual convergence and trace identity of the Hermite basis.
    Hermite {
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Sample points per axis of the base grid.
        #[arg(long, default_value_t = 96)]
        points: usize,
    },
    /// Spectral Plancherel identity and reconstruction for band truncations on the configured grid.
    Plancherel {
        #[arg(long, default_value = "bump:lo=0.5,hi=6")]
        symbol: String,
        #[arg(long, default_value_t = 8)]
        lmax: i32,
    },
    /// Decay of band-truncated p → 2 norms in the band index.
    Restriction {
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        lmin: i32,
        #[arg(long, default_value_t = 5)]
        lmax: i32,
        #[arg(long, default_value = "bump:lo=0.25,hi=4")]
        symbol: String,
        /// Measure the tails Σ_{ℓ>ι} instead of single bands.
        #[arg(long)]
        tail: bool,
    },
    /// Scaling of the weighted kernel energy of band truncations.
    WeightedPlancherel {
        #[arg(long, default_value_t = 0)]
        order: usize,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        lmin: i32,
        #[arg(long, default_value_t = 5)]
        lmax: i32,
        #[arg(long, default_value = "bump:lo=0.5,hi=2")]
        symbol: String,
        /// First coordinate of the kernel center; the rest are 0.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        a: f64,
    },
    /// Leakage of cos(t√L) f outside the inflated distance neighbourhood of supp f.
    Propagation {
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        #[arg(long, default_value_t = 1e-8)]
        cutoff: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0])]
        margins: Vec<f64>,
    },
    /// Scale uniformity of Bochner–Riesz means on a built-in smooth corpus.
    Riesz {
        #[arg(long, default_value_t = 5.0)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long = "t", value_delimiter = ',', default_values_t = vec![0.25, 1.0, 4.0])]
        t_list: Vec<f64>,
    },
    /// Restricted p₀ → 2 bounds of F(t√L) on a ball against the volume prediction.
    SteinTomas {
        #[arg(long, default_value = "bump:lo=0.5,hi=1")]
        symbol: String,
        #[arg(long = "t", value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0])]
        t_list: Vec<f64>,
        /// First-layer norm of the ball center.
        #[arg(long, default_value_t = 4.0)]
        a: f64,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        p0: f64,
        /// Judge every ratio against this constant; without it the run is informational.
        #[arg(long)]
        constant: Option<f64>,
    },
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Hermite { .. } => "hermite",
            Suite::Plancherel { .. } => "plancherel",
            Suite::Restriction { .. } => "restriction",
            Suite::WeightedPlancherel { .. } => "weighted-plancherel",
            Suite::Propagation { .. } => "propagation",
            Suite::Riesz { .. } => "riesz",
            Suite::SteinTomas { .. } => "stein-tomas",
        }
    }
}

/// Config file, then environment, then flags.
pub fn resolve_config(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<RunConfig, CliError> {
    let mut c = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    c.apply_env(env)?;
    if let Some(d) = &cli.out_dir {
        c.output_dir = d.clone();
    }
    if cli.threads.is_some() {
        c.threads = cli.threads;
    }
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(d) = cli.d1 {
        c.d1 = d;
    }
    if let Some(d) = cli.d2 {
        c.d2 = d;
    }
    if let Some(k) = cli.k_max {
        c.k_max = k;
    }
    c.validate()?;
    Ok(c)
}

fn one_line(s: &str) -> String {
    s.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join("; ")
}

/// Runs one invocation with the given environment and streams; returns the exit code.
pub fn run_with(args: Vec<OsString>, env: impl Fn(&str) -> Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(out, "{}", e.render());
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_INPUT } else { EXIT_OK };
            }
            let text = e.render().to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let _ = writeln!(err, "{}", first.trim());
            return EXIT_INPUT;
        }
    };
    let result = resolve_config(&cli, env).and_then(|config| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Input(format!("cannot start worker threads: {e}")))?;
        let mut buffer = Vec::new();
        let outcome = pool.install(|| commands::dispatch(&cli.command, &config, &mut buffer));
        let _ = out.write_all(&buffer);
        outcome
    });
    match result {
        Ok(Outcome::Success) => EXIT_OK,
        Ok(Outcome::VerdictFail) => EXIT_FAIL,
        Err(e) => {
            let kind = match e {
                CliError::Usage(_) => "usage",
                _ => "error",
            };
            let _ = writeln!(err, "{kind}: {}", one_line(&e.to_string()));
            EXIT_INPUT
        }
    }
}

pub fn run(args: Vec<OsString>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, |k| std::env::var(k).ok(), &mut stdout.lock(), &mut stderr.lock())
}
