use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial has a real root near {0}")]
    NotTotallyImaginary(f64),
    #[error("not a field: {0}")]
    NotAField(String),
    #[error("invalid field specification: {0}")]
    InvalidSpec(String),
    #[error("invalid integral basis: {0}")]
    InvalidBasis(String),
    #[error("the zero element has no weighted norm or height")]
    ZeroElement,
    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),
    #[error("denominator is not in O_K(r, eps) for eps = {eps}")]
    NotAdmissible { eps: f64 },
    #[error("radius {radius:e} lies in no ball class")]
    NoClass { radius: f64 },
    #[error("hyperplane family exceeds the budget: {spent:e} > {allowed:e}")]
    BudgetExceeded { spent: f64, allowed: f64 },
    #[error("resonant pairs in band {band} do not share a common ratio")]
    RatioNotConstant { band: u32 },
    #[error("illegal move by player {player} in round {round}: {reason}")]
    IllegalMove {
        player: char,
        round: usize,
        reason: String,
    },
    #[error("block {0} does not have determinant 1")]
    NotUnimodular(usize),
    #[error("lattice generators are linearly dependent")]
    DegenerateLattice,
    #[error("need at least 3 usable levels, got {0}")]
    InsufficientData(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{requested} decimal digits requested, at most {available} available")]
    PrecisionUnavailable { requested: u32, available: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
