//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building models, solving steps, or
/// running scenarios.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A rate, size, or parameter is outside its admissible range.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Two objects that must agree on dimension do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A death rate of zero sits above a reachable state with positive
    /// birth rate, so no stationary distribution exists on the full range.
    #[error("chain is not irreducible: zero death rate at state {state} blocks downward flow")]
    NotIrreducible {
        /// The state whose death rate vanishes.
        state: usize,
    },

    /// Entries are negative, non-finite, or do not sum to one within the
    /// declared defect.
    #[error("invalid probability vector: {0}")]
    InvalidVector(String),

    /// The stationary vector handed to a detection-enabled step is not a
    /// fixed point of the uniformized transition matrix.
    #[error("stationary vector rejected: ||pi P - pi||_inf = {residual:e} exceeds {tolerance:e}")]
    StationaryMismatch {
        /// Measured fixed-point residual.
        residual: f64,
        /// Acceptance tolerance for the residual.
        tolerance: f64,
    },

    /// A scenario file or configuration failed semantic validation.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// The dense oracle refuses matrices above its size cap.
    #[error("matrix dimension {n} exceeds dense oracle cap {cap}")]
    DenseCapExceeded {
        /// Requested dimension.
        n: usize,
        /// Largest supported dimension.
        cap: usize,
    },

    /// Gaussian elimination hit a zero pivot.
    #[error("singular linear system in dense solve")]
    SingularSystem,

    /// Scenario JSON could not be parsed; the message carries line and
    /// column information from the parser.
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),

    /// File could not be read or written.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
