//! Charts, vector fields, differential forms, Lie brackets and derivatives,
//! exterior calculus, and derived-flag rank analysis.
//!
//! Every model in this crate lives on a single global chart, so a chart is
//! just an ordered list of named coordinates with periodicity flags and
//! sampling ranges.

mod chart;
mod field;
mod flag;
mod form;

pub use chart::{Chart, ChartBuilder, CoordSpec};
pub use field::{frame_determinant, VectorField};
pub use flag::{derived_flag_profile, derived_flag_ranks_at, FlagProfile, RANK_REL_TOL};
pub use form::KForm;

use thiserror::Error;

use crate::symexpr::SymError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("duplicate coordinate `{0}` in chart")]
    DuplicateCoordinate(String),
    #[error("chart has no coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("operands live on different charts")]
    ChartMismatch,
    #[error("expected {expected} components for a {expected}-dimensional chart, got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error("state vector length {got} does not match chart dimension {expected}")]
    StateLength { expected: usize, got: usize },
    #[error("form degree {degree} exceeds chart dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },
    #[error("index tuple {0:?} is not strictly increasing within the chart dimension")]
    BadIndexTuple(Vec<usize>),
    #[error("expected a degree-{expected} form, got degree {got}")]
    WrongDegree { expected: usize, got: usize },
    #[error("no generators supplied")]
    EmptyGenerators,
    #[error(
        "rank detection stayed ambiguous across {resamples} resampled points; \
         override the chart sampling ranges to avoid a singular locus"
    )]
    DegeneratePoint { resamples: usize },
}
