use std::fmt;

use thiserror::Error;

/// A single violated parameter constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintViolation {
    pub field: String,
    pub bound: String,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.bound)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FracError {
    #[error("invalid parameters: {}", join_violations(.0))]
    InvalidParams(Vec<ConstraintViolation>),

    #[error("tolerance not met: achieved {achieved:.3e}, requested {requested:.3e}")]
    ToleranceNotMet { achieved: f64, requested: f64 },

    #[error("Gamma(b - a) has a pole at b - a = {0}")]
    PoleAtBMinusA(f64),

    #[error("imaginary residue {residue:.3e} exceeds bound {bound:.3e}")]
    ImaginaryResidueTooLarge { residue: f64, bound: f64 },

    #[error("kernel diverges at the origin for these parameters")]
    DivergentAtOrigin,

    #[error("parameters lie on a boundary this route does not support: {0}")]
    UnsupportedAtBoundary(String),

    #[error("contour abscissa {gamma} outside the admissible strip (0, {upper})")]
    ContourInvalid { gamma: f64, upper: f64 },

    #[error("moment order {delta} outside the strip ({lower}, 0)")]
    DomainViolation { delta: f64, lower: f64 },

    #[error("Gamma pole encountered at argument {0}")]
    GammaPole(f64),

    #[error("tail integral diverges for moment order {0}")]
    NonConvergentTail(f64),

    #[error("solution leaks through the periodic boundary: |N| = {magnitude:.3e} > {bound:.3e}")]
    BoundaryLeak { magnitude: f64, bound: f64 },

    #[error("route not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn join_violations(v: &[ConstraintViolation]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; ")
}

impl From<std::io::Error> for FracError {
    fn from(e: std::io::Error) -> Self {
        FracError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FracError>;
