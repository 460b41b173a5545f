use thiserror::Error;

/// Errors surfaced by model construction, cone arithmetic and fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero in Q(\u{221a}{disc})")]
    DivisionByZero { disc: u64 },

    #[error("mismatched field discriminants: {left} vs {right}")]
    DiscMismatch { left: u64, right: u64 },

    #[error("value overflows the double-precision range")]
    FloatOverflow,

    #[error("non-hyperbolic action: {0}")]
    NonHyperbolic(String),

    #[error("generator {which} is not an involution")]
    NotInvolution { which: &'static str },

    #[error("invalid chamber data: {0}")]
    BadChamber(String),

    #[error("invalid model: {0}")]
    BadModel(String),

    #[error("class outside the required cone: {0}")]
    OutsideCone(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bilinear pairing with the ample class vanishes: the class must be numerically trivial")]
    PairingVanishes,

    #[error("not a boundary class: {0}")]
    NotBoundary(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
