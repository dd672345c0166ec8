use thiserror::Error;

/// Errors raised by the packing library.
///
/// Bounded searches that merely fail to find a witness are not errors; they
/// return an explicit not-found outcome instead. `SearchExhausted` is used only
/// where the caller asked for a witness that a theorem guarantees.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("arithmetic overflow while evaluating {0}")]
    Overflow(&'static str),

    #[error("({0}) is not a Descartes quadruple (Q = {1})")]
    NotDescartes(String, i128),

    #[error("quadruple ({0}) is not primitive")]
    NotPrimitive(String),

    #[error("root reduction did not terminate within {0} swaps")]
    NonTerminating(usize),

    #[error("invalid root quadruple ({0}): {1}")]
    InvalidRoot(String, &'static str),

    #[error("inconsistent mod 8 classification: {0}")]
    InconsistentCase(String),

    #[error("bad modulus {modulus}: {reason}")]
    BadModulus { modulus: u64, reason: &'static str },

    #[error("quadruple violates a precondition: {0}")]
    BadQuadruple(String),

    #[error("discriminant mismatch: expected {expected}, found {found}")]
    DiscriminantMismatch { expected: i128, found: i128 },

    #[error("congruence constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("memory budget exceeded: need {needed} bytes, budget {budget} bytes")]
    MemoryBudgetExceeded { needed: u64, budget: u64 },

    #[error("seed circle is not an odd prime: curvature {0}")]
    SeedNotPrime(i64),

    #[error("circle not found: {0}")]
    CircleNotFound(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("placement unavailable: {0}")]
    PlacementUnavailable(String),

    #[error("residue case analysis failed: {0}")]
    CaseFailure(String),

    #[error("bound too large: {0}")]
    BoundTooLarge(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
