//! Joint functional calculus of `(L, T)` on sampled grid functions: Fourier
//! transform in `y`, Hermite expansion in `x` for each frequency.

mod fourier;
mod grid;
pub mod io;
mod joint;
mod oned;
mod regrid;
mod symbol;

pub use fourier::{fourier_y, inverse_fourier_y, YSpectrum};
pub use grid::{GridFunction, GridSpec};
pub use symbol::{band_tail, band_truncate, bochner_riesz, cosine_symbol, DyadicBump, JointSymbol, Symbol1D};
pub use joint::{
    apply_joint, apply_joint_spectrum, apply_l, apply_l_fd, apply_multiplier, cosine_propagate, eigen_energies, Applied,
    ApplyOptions, PlaneEnergies, PlaneTail, TruncationReport,
};
pub use oned::{default_sloc_grid, dyadic_piece, dyadic_piece_samples, sloc_norm, sobolev_norm, FineGrid1D};
pub use regrid::{regrid_dilate, RegridReport};
