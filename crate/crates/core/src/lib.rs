//! Learned convex shrinkage functions for ADMM denoising.
//!
//! The crate learns a one-dimensional shrinkage function `T` that replaces the
//! proximal step of an ADMM solver for
//!
//! ```text
//! min_x  ½‖y − x‖² + Σ_i Φ([Lx]_i)
//! ```
//!
//! where `L` is the finite-difference operator. `T` is a B-spline curve whose
//! coefficients are fitted by backpropagating the reconstruction error through
//! a fixed number of unrolled ADMM iterations. In constrained mode the curve is
//! kept antisymmetric and firmly nonexpansive, so it is the proximal map of a
//! symmetric convex penalty: the solver provably converges, the penalty can be
//! recovered numerically, and the learned operator can be rescaled to a new
//! noise level without retraining.
//!
//! Module map:
//!
//! - [`signal`]: Lévy-process generators, AWGN and the difference operator.
//! - [`spline`]: B-spline kernels, shrinkage splines, noise-level scaling and
//!   penalty recovery.
//! - [`admm`]: the generalized ADMM iteration and its tridiagonal solver.
//! - [`learning`]: backpropagation, projection onto the constraint set and the
//!   gradient-descent trainers.
//! - [`baselines`]: LMMSE, total variation and a grid-based exact MMSE smoother.
//! - [`experiments`]: noise sweeps, learn-once scaling, iteration-count
//!   stability and cost traces.
//! - [`cli`]: the command-line front end used by the `proxlearn` binary.

pub mod admm;
pub mod baselines;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod learning;
pub mod selftest;
pub mod signal;
pub mod spline;

pub use admm::{
    admm_run, cost_eval, AdmmConfig, AdmmTrace, Identity, Shrinkage, SoftThreshold,
    TridiagFactorization,
};
pub use error::{Error, Result};
pub use learning::{
    backprop_gradient, batch_gradient, knot_range_from_data, project_to_s, train,
    ConstraintSet, GradientResult, Init, TrainConfig, TrainOutcome, TrainingMode,
};
pub use signal::{
    add_awgn, apply_l, apply_lt, cumulative_sum, generate, DifferenceOperator, LevyModel,
    SignalBatch,
};
pub use spline::{
    kernel_deriv, kernel_eval, recover_penalty, scale_operator, BSplineKernel, PenaltyCurve,
    ScaledShrinkage, ShrinkageSpline, SplineArtifact, SplineMode,
};
