use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid symbolic system: {0}")]
    InvalidSystem(String),

    #[error("rung size {requested} exceeds the materialized alphabet ({cutoff} symbols)")]
    CutoffExceeded { requested: usize, cutoff: usize },

    #[error("subalphabet is not finitely primitive up to order {max_order}")]
    NotPrimitive { max_order: usize },

    #[error("driving weights cannot be normalized: {0}")]
    Unnormalizable(String),

    #[error("potential is not summable at s = {s}")]
    Divergent { s: f64 },

    #[error("enumeration budget exceeded: {words} words (limit {limit})")]
    BudgetExceeded { words: f64, limit: f64 },

    #[error("conformal map for edge {edge} has no declared derivative bounds")]
    MissingDerivativeBounds { edge: usize },

    #[error("no sign change found in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("word {0:?} is not admissible")]
    InadmissibleWord(Vec<usize>),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("exponent {beta} is outside (0, inf)")]
    BetaOutOfRange { beta: f64 },

    #[error("random boundary separation fails: margin {margin}")]
    NonPositiveMargin { margin: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
