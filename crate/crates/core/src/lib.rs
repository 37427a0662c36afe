//! Pseudo-spectral simulation and verification suite for the semilinear damped
//! wave equation `u_tt + (-aΔ + b(-Δ)^σ)u + u_t = |u|^p`.

pub mod certificate;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod fit;
pub mod quadrature;
pub mod radial;
pub mod snapshot;
pub mod symbols;
pub mod torus;

pub use error::{Error, Result};
pub use symbols::{OperatorParams, KernelValues, CharacteristicRoots, DuhamelWeights, Regime};
