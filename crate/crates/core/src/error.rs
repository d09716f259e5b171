//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its mathematical domain (p < 1, s ∉ (0,1), …).
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation's precondition is violated (box too large for the grid,
    /// symbol without a zero fed to a zero scan, …).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Structurally incompatible inputs (dimension or grid mismatch).
    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    /// A window/generator tail exceeds its declared decay tolerance.
    #[error("decay certificate unmet: {0}")]
    DecayCertificate(String),

    /// Weight is numerically zero everywhere; weighted constants are undefined.
    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    /// Matrix field deviates from Hermitian symmetry beyond tolerance.
    #[error("not Hermitian: {0}")]
    NotHermitian(String),

    /// An internal numerical routine failed to meet its own tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
