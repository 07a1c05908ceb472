use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("factor width must be at least 2 bits, got {0}")]
    WidthTooSmall(usize),

    #[error("{n} does not fit in a {bits}-bit product register")]
    NotRepresentable { n: u64, bits: usize },

    #[error("invalid clause system: {0}")]
    InvalidClauses(String),

    #[error("DIMACS parse error on line {line}: {msg}")]
    Dimacs { line: usize, msg: String },

    #[error("unknown graph vertex {0}")]
    UnknownVertex(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid flow parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite derivative at t = {t}")]
    NonFinite { t: f64 },

    #[error("sample length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),

    #[error("variance of variable {var} at the reference time is degenerate")]
    DegenerateVariance { var: usize },

    #[error("instanton family: {0}")]
    Toy(String),

    #[error("tangential crossing at sigma = {sigma:?} (|det| = {det:e}); refine the moduli grid")]
    Tangency { sigma: Vec<f64>, det: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
