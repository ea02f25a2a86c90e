//! Error types shared by the crate.

use thiserror::Error;

/// Errors from the polynomial symbol algebra.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("variable contexts do not match: {0:?} vs {1:?}")]
    ContextMismatch(crate::symbols::VarContext, crate::symbols::VarContext),
    #[error("variable {0:?} is not part of the context {1:?}")]
    VariableNotInContext(crate::symbols::PhaseVar, crate::symbols::VarContext),
    #[error("Planck constant must be positive, got {0}")]
    NonPositivePlanck(f64),
    #[error("point has {got} coordinates, context needs {expected}")]
    PointLength { expected: usize, got: usize },
}

/// Errors from grids, kernels and operator matrices.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid size {0} must be a power of two and at least 8")]
    BadGridSize(usize),
    #[error("grid extent {0} must be positive")]
    BadExtent(f64),
    #[error("array shape {got:?} does not match grids {expected:?}")]
    ShapeMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("symbol support exceeds grid bandwidth (relative tail {tail:.3e} over threshold {threshold:.3e})")]
    NyquistViolation { tail: f64, threshold: f64 },
    #[error("operator matrix is not on a position grid")]
    BasisMismatch,
    #[error("operator dimension {0} does not match vector length {1}")]
    DimensionMismatch(usize, usize),
    #[error("k and x grids are not conjugate for this Planck constant")]
    IncompatibleGrids,
}

/// Errors from the propagation schemes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state shape does not match the Hamiltonian ({0} vs {1} states)")]
    StateShapeMismatch(usize, usize),
    #[error("Hamiltonian matrix of symbols is not Hermitian (max defect {0:.3e})")]
    NonHermitianHamiltonian(f64),
    #[error("classical position/momentum matrices are not symmetric (max defect {0:.3e})")]
    AsymmetricConfiguration(f64),
    #[error("non-finite value encountered at step {step}")]
    Instability { step: usize },
    #[error("state does not factorize: quantum purity {purity:.6} below threshold {threshold}")]
    NotFactorizable { purity: f64, threshold: f64 },
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Errors from the analytic oscillator solution.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OscillatorError {
    #[error("coupling alpha = {0} leaves 1 + 2*alpha non-positive")]
    InvalidAlpha(f64),
}
