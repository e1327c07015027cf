//! Error type shared by all engine modules.

use thiserror::Error;

/// Errors produced by state construction, quadrature, post-selection and
/// meter operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A matrix meant to be an observable is not self-adjoint.
    #[error("matrix is not Hermitian: max |M - M†| entry = {max_asymmetry:.3e}")]
    NotHermitian { max_asymmetry: f64 },

    /// A state vector is not normalized to within tolerance.
    #[error("state is not normalized: ‖ψ‖² = {norm_sq:.17}")]
    NotNormalized { norm_sq: f64 },

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Pre- and post-selection states are (nearly) orthogonal, so the weak
    /// value diverges and the first-order expansion is meaningless.
    #[error("degenerate selection: |⟨Φ|Ψ⟩| = {overlap:.3e} below tolerance {tolerance:.3e}")]
    DegenerateSelection { overlap: f64, tolerance: f64 },

    /// The mean-coupling rotation e^{-i⟨k⟩C} carried |Ψ⟩ (nearly) orthogonal
    /// to |Φ⟩; the offset decomposition cannot proceed.
    #[error(
        "degenerate selection after mean-offset rotation by ⟨k⟩ = {mean_offset}: \
         |⟨Φ|Ψ'⟩| = {overlap:.3e} below tolerance {tolerance:.3e}"
    )]
    DegenerateOffset {
        overlap: f64,
        tolerance: f64,
        mean_offset: f64,
    },

    /// A grid distribution cannot be built from the given nodes/densities.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A meter wavefunction cannot be built or used as requested.
    #[error("invalid meter: {0}")]
    InvalidMeter(String),

    /// Two meter states do not share a grid.
    #[error("meter grids do not match")]
    GridMismatch,

    /// The initial meter wavefunction is complex-valued, so the conjugate
    /// shift formula carries no guarantee. Use the explicit override to
    /// compute it anyway.
    #[error("meter wavefunction is complex (max |Im ψ| = {max_imag:.3e}); refusing conjugate-shift computation")]
    ComplexMeter { max_imag: f64 },

    /// Post-selection succeeds with (numerically) zero probability.
    #[error("post-selection probability {probability:.3e} is numerically zero")]
    VanishingPostselection { probability: f64 },

    /// A Monte-Carlo run accepted no samples at all.
    #[error("Monte-Carlo run accepted 0 of {n_total} samples (seed {seed})")]
    NoAcceptedSamples { n_total: u64, seed: u64 },

    /// An operation parameter is out of its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// CSV ingestion/emission failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
