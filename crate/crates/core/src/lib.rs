//! Operator-valued Schur interpolation for finite-dimensional Taylor data.
//!
//! Given matrices `C_0, ..., C_N` the crate decides whether a Schur-class
//! function with these leading Taylor coefficients exists, computes its
//! Schur parameters (a choice sequence of contractions acting between defect
//! subspaces), and parametrizes every solution through a fractional linear
//! transformation whose coefficients are resolvents of finite sub-matrices of
//! block CMV matrices.
//!
//! Module map:
//!
//! - [`linalg`]: dense complex kernel (PSD square roots, range bases, norms, solves)
//! - [`defect`]: defect operators, defect subspaces and elementary rotations
//! - [`sequence`]: Toeplitz matrices, Kreĭn shorted operators, Taylor data <-> Schur parameters
//! - [`cmv`]: block-diagonal rotation layers and the sub-matrices `S_n`, `S_{n,0}`
//! - [`solution`]: coefficient functions and the solution map `Θ_E`
//! - [`realization`]: point evaluation of Schur functions, Taylor extraction, norm certification

pub mod cmv;
pub mod defect;
pub mod error;
pub mod linalg;
pub mod realization;
pub mod sequence;
pub mod solution;

#[cfg(test)]
mod testutil;

pub use error::{Result, SchurError};
pub use linalg::ComplexMatrix;
pub use num_complex::Complex64;

/// Numerical thresholds threaded through every computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative threshold for rank decisions (eigenvalues of PSD operators).
    pub rank_tol: f64,
    /// Slack above 1 accepted when testing for contractivity.
    pub contraction_slack: f64,
    /// Slack above 1 accepted when certifying Schur-class values.
    pub cert_tol: f64,
    /// Residual bound for restricted inversions in the parameter recursion.
    pub consistency_tol: f64,
    /// Per-dimension threshold below which a shorted operator counts as zero.
    pub degeneracy_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            contraction_slack: 1e-8,
            cert_tol: 1e-9,
            consistency_tol: 1e-8,
            degeneracy_tol: 1e-9,
        }
    }
}

/// Points with `|z|` above this bound are refused by every evaluator.
pub const DISK_GUARD: f64 = 1.0 - 1e-9;

pub(crate) fn check_disk(z: Complex64) -> Result<()> {
    if z.norm() <= DISK_GUARD && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(SchurError::OutsideDisk { re: z.re, im: z.im })
    }
}
