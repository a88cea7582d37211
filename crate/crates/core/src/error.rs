use std::fmt;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Network parameters violate an invariant (nonpositive power, NaN gain, ...).
    InvalidParams(String),
    /// A power profile is outside the box `[0, P_i]` or has the wrong length.
    InvalidProfile(String),
    /// Rule/profile dimensions disagree.
    DimensionMismatch { expected: usize, got: usize },
    /// User index out of range.
    InvalidUser(usize),
    /// A design or sequence precondition cannot be met (capability too small,
    /// relative distance out of range, ...).
    Infeasible(String),
    /// A brute-force guard tripped (grid too large).
    Tractability(String),
    /// A linear system was singular or too ill-conditioned to trust.
    Singular(String),
    /// The measurement protocol failed (for example a user never responded).
    Protocol(String),
    /// Scenario file problems; the message carries the specific diagnostic.
    Scenario(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(m) => write!(f, "invalid network parameters: {m}"),
            Error::InvalidProfile(m) => write!(f, "invalid power profile: {m}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidUser(i) => write!(f, "invalid user index {i}"),
            Error::Infeasible(m) => write!(f, "infeasible: {m}"),
            Error::Tractability(m) => write!(f, "intractable: {m}"),
            Error::Singular(m) => write!(f, "singular system: {m}"),
            Error::Protocol(m) => write!(f, "protocol failure: {m}"),
            Error::Scenario(m) => write!(f, "scenario error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
