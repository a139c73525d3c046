//! Solver for the higher-order nonlinear Schrödinger (HNLS) equation
//!
//! ```text
//!     i v_τ + γ v_ξξ + i χ v_ξξξ = κ |v|² v,     α(τ) < ξ < β(τ)
//! ```
//!
//! on an interval whose endpoints move in time. The moving interval is mapped
//! onto `[0, 1]`, which turns the motion into variable coefficients and an
//! advection field, and the transformed equation is advanced with a
//! Crank–Nicolson finite-difference scheme whose cubic term is resolved by a
//! Picard fixed-point iteration over pentadiagonal solves.
//!
//! # Modules
//!
//! - [`domain`]: boundary profiles, admissibility check, coordinate maps
//! - [`coefficients`]: width scale factors and the advection field
//! - [`grid`]: the constrained grid space and difference operators
//! - [`banded`]: banded LU with partial pivoting
//! - [`stepper`]: the time step and trajectory integration
//! - [`diagnostics`]: norms, energy balance, decay monitor
//! - [`study`]: convergence-order harness and the domain-length sweep
//! - [`gauge`]: phase-and-shift transform to the KdV form
//! - [`oracle`]: dense solves and an explicit reference integrator
//! - [`scenario`]: initial conditions, scenario files and built-in cases
//! - [`output`]: CSV / JSON writers
//! - [`par`]: batch execution, parallel when the `parallel` feature is on

// NaN must fail range checks, and index loops mirror the stencils.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod coefficients;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod gauge;
pub mod grid;
pub mod oracle;
pub mod output;
pub mod par;
pub mod scenario;
pub mod stepper;
pub mod study;

pub use num_complex::Complex64;

pub use coefficients::{evaluate_coefficients, CoefficientSlice};
pub use diagnostics::{DiagnosticsRecord, Weight};
pub use domain::{BoundaryProfile, BoundaryState, DomainCheck, MovingDomain, PhysicalField};
pub use error::{DomainError, Error, GridError, IntegrateError, SolveError, StepError};
pub use grid::{BandedMatrix, DifferenceOperators, GridSpec, StateVector};
pub use scenario::{InitialCondition, Scenario};
pub use stepper::{integrate, CoeffTime, Equation, Problem, SchemeConfig, StepReport, Stepper, Trajectory};
