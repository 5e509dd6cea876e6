//! Linearized compressible two-fluid Rayleigh–Taylor instability.

pub mod acceptance;
pub mod band;
pub mod bessel;
pub mod cli;
pub mod config;
pub mod dispersion;
pub mod barotropic;
pub mod error;
pub mod evolution;
pub mod export;
pub mod illposed;
pub mod jet;
pub mod steady_state;
pub mod synthesis;
pub mod vgrid;

pub use barotropic::BarotropicLaw;
pub use error::{Error, Result};
pub use steady_state::{build_profile, check_instability, compute_rho0_plus, Side, SteadyProfile, TwoFluidConfig};
