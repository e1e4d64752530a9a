use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian within tolerance (defect {defect:.3e}, allowed {allowed:.3e})")]
    NotHermitian { defect: f64, allowed: f64 },

    #[error("pole while evaluating {entry}: |den| = {den_abs:.3e}")]
    Pole { entry: String, den_abs: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("matrices do not commute: commutator ({i},{j}) has Frobenius norm {norm:.3e}")]
    Commutativity { i: usize, j: usize, norm: f64 },

    #[error("spectrum error: {0}")]
    Spectrum(String),

    #[error("point {index} lies outside the domain (margin {margin:.6e})")]
    Domain { index: usize, margin: f64 },

    #[error("duplicate points: {0} and {1} coincide")]
    Duplicate(usize, usize),

    #[error("solver inconclusive after {iterations} iterations (best residual {residual:.3e})")]
    Inconclusive { iterations: usize, residual: f64 },

    #[error("tuple is not admissible: constraint {k} has margin {margin:.6e}")]
    Admissibility { k: usize, margin: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
