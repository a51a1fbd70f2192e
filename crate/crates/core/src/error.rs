use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid position: {0}")]
    InvalidPosition(String),

    #[error("invalid rules: {0}")]
    InvalidRules(String),

    #[error("illegal move {mv}: {reason}")]
    IllegalMove { mv: String, reason: String },

    #[error("mixed rule variants in disjunctive sum: {left} + {right}")]
    MixedVariants { left: String, right: String },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("resource limit exceeded: {0}")]
    ResourceExhausted(String),

    #[error("terminal position has no moves")]
    TerminalPosition,

    #[error("arity mismatch: expected {expected} bits, got {actual}")]
    ArityMismatch { expected: usize, actual: usize },

    #[error("malformed circuit: {0}")]
    MalformedCircuit(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("threshold {threshold} of {neuron} exceeds the constant cap {cap}")]
    ThresholdCap { neuron: String, threshold: i64, cap: u32 },

    #[error("agent error: {0}")]
    Agent(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
