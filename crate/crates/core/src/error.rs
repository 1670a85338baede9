use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("record for generation {found} committed while generation {expected} was open")]
    MixedGeneration { expected: usize, found: usize },

    #[error("operator {op} out of range for {k} enabled operators")]
    OperatorOutOfRange { op: usize, k: usize },

    #[error("only improving offspring may enter the window")]
    NotImproved,

    #[error("{0} requires a non-empty input")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("function f{fid:02} is not implemented (available: {available:?})")]
    UnsupportedFunction { fid: u32, available: Vec<u32> },

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("population of {np} is too small for {strategy} (needs at least {needed})")]
    PopulationTooSmall {
        strategy: &'static str,
        np: usize,
        needed: usize,
    },

    #[error("objective returned non-finite value {value} at evaluation {evaluation}")]
    NonFiniteFitness { value: f64, evaluation: u64 },

    #[error("budget of {budget} evaluations cannot cover the initial population of {np}")]
    BudgetTooSmall { budget: u64, np: usize },

    #[error("unknown preset {name:?}; available: {catalog:?}")]
    UnknownPreset { name: String, catalog: Vec<&'static str> },

    #[error("singular linear system")]
    Singular,

    #[error("racing budget of {total_runs} runs cannot cover {needed} initial evaluations")]
    RaceBudget { total_runs: usize, needed: usize },

    #[error("racing needs at least two candidates, got {0}")]
    TooFewCandidates(usize),

    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::config(field, reason)
}
