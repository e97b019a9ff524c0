//! Curves in CP^3: angle-field grids, superminimal families and frame reconstruction.

pub mod grid;
pub mod reconstruct;
pub mod superminimal;

use crate::cp3::Cp3Error;
use crate::quat::QuatError;
use crate::toda::TodaError;
use thiserror::Error;

pub use grid::{AngleField, EtaForm, GridFile};
pub use reconstruct::{aligned_initial_frame, reconstruct_u1_curve, FramePath};
pub use superminimal::{superminimal_eval, PhiCoefficients, Rational, SuperminimalCurve};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("angle field must be positive (found {0})")]
    NonPositiveField(f64),
    #[error("bad grid shape: {0}")]
    GridShape(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("indeterminate point")]
    Indeterminate,
    #[error("branch point: g' = 0")]
    BranchPoint,
    #[error("frame step too large (unitarity defect {0:.3e}); reduce dt")]
    StepTooLarge(f64),
    #[error("frame alignment failed: {0}")]
    Alignment(String),
    #[error(transparent)]
    Quat(#[from] QuatError),
    #[error(transparent)]
    Toda(#[from] TodaError),
    #[error(transparent)]
    Cp3(#[from] Cp3Error),
}
