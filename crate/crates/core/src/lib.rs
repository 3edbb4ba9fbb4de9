//! Pathwise solution of semilinear parabolic equations on the unit interval
//! driven by multiplicative rough boundary noise, in a truncated spectral
//! representation.

pub mod boundary;
pub mod config;
pub mod controlled;
pub mod convolution;
pub mod driver;
pub mod error;
pub mod grid;
pub mod scale;
pub mod semigroup;
pub mod solver;
pub mod studies;

pub use boundary::{dirichlet_map, lift_controlled, neumann_map, BoundaryVector, LiftOperator};
pub use controlled::{compose_smooth, crp_components, crp_norm, lift_extrapolate, ControlledPath, CrpNorms, SmoothMap, Space};
pub use convolution::{remainder_certificate, rough_convolve, sewing_convergence, young_convolve, HolderPath};
pub use driver::{holder_seminorm, lift_geometric, rho, rough_metric, sample_fbm, FbmSampler, Lift, RoughDriver};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use scale::{build_scale, fractional_power, scale_norm, BoundaryCondition, Scale, ScaleConfig, SpectralVector};
pub use solver::{
    cocycle_defect, drift_convolve, solve_global, solve_local, solve_young_dirichlet, stability_distance, Diffusion, Drift,
    PicardConfig, ProblemSpec, Solution,
};
pub use semigroup::{apply_semigroup, smoothing_constants};
