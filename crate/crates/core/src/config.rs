//! Numerical tolerances shared by every module.
//!
//! Every routine that compares a floating-point quantity against a threshold
//! takes a [`Tolerances`] value explicitly; nothing reads a global.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed `‖A − A*‖_F / (1 + ‖A‖_F)` for inputs treated as Hermitian.
    pub hermitian: f64,
    /// Jacobi stops once off-diagonal Frobenius mass is below this times `‖A‖_F`.
    pub jacobi_offdiag: f64,
    pub jacobi_max_sweeps: usize,
    /// `|den(z)|` at or below this is a pole.
    pub pole: f64,
    /// Frobenius bound on pairwise commutators.
    pub commutator: f64,
    /// Smallest singular value of `den(T)` accepted as invertible.
    pub singular: f64,
    /// Most negative eigenvalue a certificate block may carry.
    pub cert_min_eig: f64,
    /// Residual below which `verify_certificate` accepts.
    pub verify_residual: f64,
    /// Most negative admissibility margin accepted for a tuple.
    pub admissible_margin: f64,
    /// Relative tolerance used by the classical Pick test: `λ_min ≥ −pick·t²`.
    pub pick: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-9,
            jacobi_offdiag: 1e-12,
            jacobi_max_sweeps: 100,
            pole: 1e-14,
            commutator: 1e-10,
            singular: 1e-10,
            cert_min_eig: 1e-8,
            verify_residual: 1e-6,
            admissible_margin: 1e-9,
            pick: 1e-10,
        }
    }
}
