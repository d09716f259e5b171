//! Numerical laboratory for truncated Fourier multipliers on the torus.
//!
//! The crate is organized around a spectral substrate ([`grid`]) and a set of
//! analysis kernels built on top of it:
//!
//! * [`sobolev`]: Bessel, anisotropic and Slobodeckij smoothness functionals,
//!   Hölder-quotient diagnostics.
//! * [`multiplier`]: truncated convolution operators `T_u`, their
//!   `ℓ² → ℓ^q` norm estimation with witness certificates, and τ-scans at
//!   zeros of the symbol.
//! * [`matrix_multiplier`]: K×K Hermitian symbols, pointwise eigenvalue
//!   tracks and the scalar/matrix norm equivalence checks.
//! * [`constructions`]: the explicit window families (`w_β`, `h_β`, tensor
//!   products) used as sharpness witnesses by the scans.
//! * [`zak`]: discrete Zak transform, quasi-periodicity diagnostics and
//!   Gabor completeness constants.
//! * [`shift_invariant`]: Gramian periodization, extra-invariance rank
//!   tests and translate-system completeness constants.
//! * [`zeroset`]: box-counting dimension estimates of generalized zero sets
//!   and localized Poincaré checks.
//! * [`fit`]: the shared log-log regression and divergence classifier that
//!   every scan reports through.
//!
//! All types are immutable after construction and every operation is a pure
//! function; parallel kernels collect partial results in index order so that
//! outputs are bit-stable regardless of worker count.

pub mod constructions;
pub mod error;
pub mod fit;
pub mod grid;
pub mod matrix_multiplier;
pub mod multiplier;
pub mod norms;
pub mod quad;
pub mod shift_invariant;
pub mod sobolev;
pub mod zak;
pub mod zeroset;

pub use error::{Error, Result};
pub use grid::{
    analyze, lp_norm, lq_norm, synthesize, CoeffField, FreqBox, SampleField, TorusGrid,
};

/// Default seed used by every randomized kernel unless overridden.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;
