//! Forward and inverse solvers for a spatial SIS reaction-diffusion model.
//!
//! The direct problem evolves susceptible and infected densities (S, I)
//! under identity diffusion, a power-law infection term
//! `beta(x) * S^m * I^n` and linear recovery `gamma(x) * I`, with
//! zero-flux boundaries. The inverse problem recovers the spatially
//! varying rate fields `beta` and `gamma` from observations of S and I at
//! the final time, by minimizing a Tikhonov-regularized least-squares
//! cost with adjoint-based projected gradient descent over a box of
//! admissible rates.
//!
//! Module map:
//! - [`grid`]: cell-centered grids, Neumann Laplacian, inner products, CSV i/o.
//! - [`linsolve`]: tridiagonal and conjugate-gradient solves of the implicit
//!   diffusion step.
//! - [`forward`]: the IMEX marching scheme for the direct problem and its
//!   conservation and positivity diagnostics.
//! - [`sensitivity`]: adjoint and tangent-linear systems plus the duality
//!   (dot-product) diagnostic.
//! - [`inverse`]: cost, reduced gradient, box projection, Sobolev smoothing
//!   and the projected-gradient descent loop.
//! - [`twin`]: synthetic ground-truth experiments and recovery scoring.
//! - [`config`]: flat `section.key = value` run configuration.
//! - [`run`]: orchestration of the four run verbs and report emission.

pub mod config;
pub mod error;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod linsolve;
pub mod run;
pub mod sensitivity;
pub mod twin;

pub use error::{Error, Result};
pub use forward::{
    dt_max_heuristic, mass, reaction, solve_forward, step_forward, validate_initial, Bounds,
    ModelConfig, Parameters, Trajectory,
};
pub use grid::{
    inner_l2, laplacian_neumann, norm_l2, read_field_csv, seminorm_h1, write_field_csv, Field, Grid,
};
pub use inverse::{
    evaluate_cost, invert, project_box, reduced_gradient, sobolev_smooth, Gradient, InverseConfig,
    InversionReport, IterationRecord, Termination,
};
pub use sensitivity::{
    duality_gap, solve_adjoint, solve_tangent, AdjointTrajectory, TangentTrajectory,
};
pub use twin::{make_truth, observe, score, Profile, Scores, TwinSpec};
