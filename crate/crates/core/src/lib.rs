//! Uniformly rotating vortex patches in the unit disk.
//!
//! Boundaries are truncated conformal maps sampled on uniform θ-grids; velocities
//! come from contour integrals with the disk image term; equilibria are found by
//! Newton's method on the Fourier coefficients and checked by contour dynamics.

pub mod dynamics;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod multi;
pub mod solver;
pub mod spectral;

pub use dynamics::{
    boundary_velocity, evolve, hausdorff_distance, redistribute, rigid_rotation_error, EvolutionLog, EvolveOptions,
    PatchState,
};
pub use error::{Error, Result};
pub use geometry::{
    enclosed_area, eval_near_disk_map, eval_outer_map, renormalize_scale, FourierBoundary, NearDiskDomain,
    SampledCurve,
};
pub use functional::{
    invertibility_margin, jacobian_numeric, kirchhoff_check, linearization_analytic, linearization_swapped_band,
    margin_term, single_omega, spectrum_comparison, SpectrumComparison,
    residual_single, residual_single_with, LinearizedOperator, ResidualOptions, SineSpectrum,
    SinglePatchProblem,
};
pub use kernels::{
    circulation, green_disk, patch_velocity, patch_velocity_with, robin_function, robin_gradient,
    robin_regular_gradient, robin_regular_part, tangency_check, tangency_check_with, PatchSource,
    VelocityOptions,
};
pub use multi::{
    boundary_distance, limit_position_operator, near_disk_linearization, near_disk_self_term, residual_multi,
    DistanceCoefficient, LimitReport, MultiConfig, MultiProblem, MultiResidual,
};
pub use num_complex::Complex64;
pub use solver::{continuation, log_log_slope, newton_solve, NewtonOptions, Problem, SolveReport};
