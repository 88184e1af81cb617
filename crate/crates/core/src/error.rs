use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid dimension {n}: at least {min} basis states are required")]
    InvalidDimension { n: usize, min: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not symmetric: |M[{row}][{col}] - M[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("non-finite matrix element at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("ground state has no overlap with the anchor state (a11 = {a11:e})")]
    DegenerateAnchor { a11: f64 },

    #[error("renormalisation condition has complex roots (discriminant {discriminant:e})")]
    ComplexRoots { discriminant: f64 },

    #[error("renormalisation condition has no solution (a = {a:e}, b = {b:e}, c = {c:e})")]
    NoSolution { a: f64, b: f64, c: f64 },

    #[error("eliminated-state propagator is near singular (denominator {denominator:e})")]
    NearSingularDenominator { denominator: f64 },

    #[error("constraint residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("spectrum is not sorted ascending at index {index}")]
    UnsortedSpectrum { index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {message}")]
    ModelFile { path: PathBuf, message: String },

    #[error("step {dimension} -> {}: {source}", dimension - 1)]
    AtStep {
        dimension: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps `self` with the dimension at which a reduction step failed.
    pub fn at_step(self, dimension: usize) -> Self {
        Error::AtStep {
            dimension,
            source: Box::new(self),
        }
    }

    /// The error with any step context removed.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root_cause(),
            other => other,
        }
    }
}
