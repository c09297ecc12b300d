//! Dimer matching counts, double-dimer hook-up probabilities, and their
//! continuum limit on rectangular grids.
//!
//! The crate computes the probability that the two open paths of a
//! double-dimer configuration with four corner monomers hook up sideways,
//! three independent ways:
//!
//! * [`oracle`]: exact combinatorial enumeration (transfer-matrix counts,
//!   explicit matching enumeration, path classification),
//! * [`spectral`]: closed-form mode products and sums over transverse modes,
//! * [`continuum`]: the scaling limit expressed through theta-like series
//!   and complete elliptic integrals.
//!
//! All real arithmetic goes through [`hp::HpReal`], an explicit-precision
//! floating type; counts are exact big integers.

pub mod continuum;
pub mod hp;
pub mod oracle;
pub mod spectral;

pub use hp::HpReal;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Both requested grid dimensions exceed the transfer-matrix mask limit.
    #[error("grid too large: min dimension {min_side} exceeds limit {limit}")]
    DimensionTooLarge { min_side: u32, limit: u32 },

    /// Explicit enumeration would exceed the configured cap.
    #[error("enumeration would exceed cap of {cap} matchings")]
    EnumerationCapExceeded { cap: usize },

    /// A pair of matchings does not form a valid superposition for the
    /// requested monomer sets.
    #[error("malformed superposition: {0}")]
    MalformedSuperposition(String),

    /// Monomer placement violates the bipartite parity constraint.
    #[error("parity violation: {0}")]
    ParityViolation(String),

    /// A value could not be rounded to an integer with a certified gap.
    #[error("precision insufficient: rounding gap 2^{gap_log2} at {precision} bits")]
    PrecisionInsufficient { gap_log2: i64, precision: usize },

    /// A series or iteration failed to converge within its term budget.
    #[error("convergence failure after {terms} terms")]
    ConvergenceFailure { terms: usize },

    /// Invalid argument outside any function's domain.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
