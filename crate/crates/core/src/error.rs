use thiserror::Error;

use crate::algebra::AlgebraDescriptor;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("algebra mismatch: {left} vs {right}")]
    AlgebraMismatch {
        left: AlgebraDescriptor,
        right: AlgebraDescriptor,
    },
    #[error("operation requires a {expected} algebra, got {found}")]
    WrongKind {
        expected: &'static str,
        found: AlgebraDescriptor,
    },
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },
    #[error("target norm must be positive and finite, got {0}")]
    NonPositiveNorm(f64),
    #[error("element is not unitary: ||u u* - e|| = {defect:e}")]
    NotUnitary { defect: f64 },
    #[error("scalar {value} is not unit-modulus")]
    NotUnitModulus { value: num_complex::Complex64 },
    #[error("unitary decomposition failed: {0}")]
    Decomposition(String),
    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),
    #[error("evaluation point must be 0 for the truncated algebra, got {0}")]
    NonZeroPoint(num_complex::Complex64),
    #[error("tensor shape mismatch: expected {expected} coefficients, got {found}")]
    TensorShape { expected: usize, found: usize },
    #[error("invalid stability parameters: {0}")]
    InvalidParams(String),
    #[error("regime mismatch: {0}")]
    Regime(String),
    #[error("Hyers iteration did not converge within {steps} steps (last step {last_step:e}, tail bound {tail_bound:e})")]
    NonConvergence {
        steps: usize,
        last_step: f64,
        tail_bound: f64,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported schema version {found} (expected {expected})")]
    Schema { found: u32, expected: u32 },
}
