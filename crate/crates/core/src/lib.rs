//! Spectral calculus for the Grushin operator `L = -Δ_x - |x|² Δ_y` on ℝ^{d₁} × ℝ^{d₂}.

pub mod calculus;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod hermite;
pub mod tensor;

pub use error::{Error, Result};
