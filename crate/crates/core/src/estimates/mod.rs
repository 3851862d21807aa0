//! Norm estimates and experiments comparing measured rates with predicted ones.
mod hermite_scan;
mod norm;
mod plancherel;
mod propagation;
mod report;
mod restriction;
mod riesz;
mod spectral;

pub use norm::{opnorm_p_to_2, FnOperator, LinearOperator, NormEstimate, NormMethod, EXHAUSTIVE_COLUMN_LIMIT};
pub use report::{
    fit_exponent, restriction_exponent_limit, restriction_in_hypothesis, spread, Criterion, ExperimentReport, ExponentFit, SeriesPoint,
    Verdict, DEFAULT_EXPONENT_TOLERANCE, REPORT_SCHEMA_VERSION,
};
pub use spectral::{
    kernel_column_energy, kernel_column_sup, probe_image_energy, probe_ratio, spectral_sup, sphere_area, GaussianProbe, RadialRule, SpectralValue,
};
pub use restriction::{away_from_origin_gain, restriction_decay, restriction_tail_decay, stein_tomas_condition, RadialBall, SpectralRunOptions};
pub use plancherel::{
    weighted_kernel_energy, weighted_kernel_energy_grid, weighted_kernel_energy_lattice, weighted_plancherel, GridKernelEnergy, PlancherelOptions,
};
pub use propagation::{propagation_leakage, propagation_refinement, truncated_gaussian, PropagationOptions, DEFAULT_KAPPA};
pub use hermite_scan::{hermite_bound_scan, ray_samples, ExponentialFit, HermiteScanOptions};
pub use riesz::{riesz_uniformity, RieszOptions};
