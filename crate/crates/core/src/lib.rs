//! Symbolic vector-field calculus for control-style ODE systems:
//! Lie brackets and differential forms on explicit charts, detection of
//! finite-dimensional Lie algebras spanned by given generators, one-dimensional
//! principal reductions, and reconstruction of full solutions from reduced
//! ones with numerical residual diagnostics.
//!
//! The crate is organized bottom-up:
//!
//! * [`symexpr`] — exact expression trees with symbolic differentiation and
//!   seeded sampling-based zero tests;
//! * [`geometry`] — charts, vector fields, k-forms, exterior calculus and
//!   derived-flag ranks;
//! * [`liealg`] — bracket-closure generation, structure constants,
//!   commutation-table verification;
//! * [`principal`] — one-dimensional fiber actions, projectability,
//!   pushforwards, connection forms, horizontal lifts;
//! * [`ode`] — control signals, fixed-step and adaptive integrators,
//!   quadrature, trajectories with dense output;
//! * [`reconstruct`] — the reduce / lift / group-quadrature / compose
//!   pipeline plus defect measurements against direct integration;
//! * [`models`] — the registry of built-in systems (trailer chains, the
//!   logarithmic Gambier chart, the Hopf normal form).

pub mod geometry;
pub mod liealg;
pub mod models;
pub mod ode;
pub mod principal;
pub mod reconstruct;
pub mod symexpr;

pub use geometry::{Chart, GeomError, KForm, VectorField};
pub use symexpr::{Expr, Point, SampleSpec};
