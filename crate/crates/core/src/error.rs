use thiserror::Error;

use crate::svr::DualSolution;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bit count {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitCount { len: usize, bits_per_symbol: usize },

    #[error("grid payload mismatch: {expected} data symbols required, {got} provided")]
    DataLength { expected: usize, got: usize },

    #[error("time segment has {got} samples, expected {expected}")]
    SegmentLength { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("power delay profile has no taps")]
    EmptyProfile,

    #[error("impulse probability {0} outside [0, 1]")]
    ProbabilityRange(f64),

    #[error("signal has zero power, cannot calibrate noise")]
    ZeroPowerSignal,

    #[error("duplicate pilot positions would make the Gram matrix singular")]
    DuplicatePositions,

    #[error("pilot symbol at index {0} is zero")]
    ZeroPilotSymbol(usize),

    #[error("symbol index {index} out of range (frame has {count} symbols)")]
    SymbolIndex { index: usize, count: usize },

    #[error(
        "dual solver did not converge: KKT residual {kkt_residual:.3e} after {iterations} iterations"
    )]
    SolverDidNotConverge {
        iterations: usize,
        kkt_residual: f64,
        /// Last iterate, so callers can inspect or resume.
        last: Box<DualSolution>,
    },

    #[error("estimation failed at OFDM symbol {symbol}: {source}")]
    SymbolEstimate {
        symbol: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
