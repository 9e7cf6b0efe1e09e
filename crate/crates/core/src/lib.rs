//! Projection-type solvers for monotone variational inequalities.
//!
//! Given an operator `F` and a closed convex set `C`, the problem is to find
//! `x ∈ C` with `⟨F(x), y − x⟩ ≥ 0` for every `y ∈ C`. The crate provides an
//! inertial projection method with an Armijo-type step and a half-space
//! correction, its non-inertial variant, and two subgradient extragradient
//! baselines, together with an experiment harness that checks the method's
//! convergence inequalities at every iteration.

// `!(a > b)` is used deliberately so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod feasible;
pub mod harness;
pub mod instance;
pub mod linesearch;
pub mod numerics;
pub mod operators;
pub mod solvers;

pub use error::{Error, Result};
pub use feasible::{
    project_halfspace, project_polyhedron, residual, FeasibleSet, ProjectionResult,
};
pub use instance::{load_problem, save_problem, ProblemInstanceFile};
pub use linesearch::{armijo, LineSearchOutcome};
pub use numerics::{dot, matvec, norm, spectral_norm, DenseMatrix, Vector};
pub use operators::{
    make_antidiagonal, make_hp_instance, make_pseudomonotone_scaled, monotonicity_probe,
    pseudomonotonicity_probe, Monotonicity, VIOperator, VIProblem,
};
pub use solvers::{
    solve, validate_params, Algorithm, AlphaSchedule, IterationRecord, RunReport, SolverConfig,
    Termination,
};
