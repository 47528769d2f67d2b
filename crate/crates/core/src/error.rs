use thiserror::Error;

/// Errors raised by the modulation, channel, receiver and harness layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogFskError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("index {index} outside [0, {bound})")]
    InvalidIndex { index: usize, bound: usize },
    #[error("grid size {grid} exceeds the fold-over limit {limit}")]
    FoldOver { grid: usize, limit: usize },
    #[error("symbol {symbol} outside the admissible alphabet [0, {max}]")]
    InvalidSymbol { symbol: usize, max: usize },
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("receiver saturation: y/A_r reached {value:.3} (cap {cap})")]
    Saturation { value: f64, cap: f64 },
    #[error("PAPR undefined for an all-zero signal")]
    ZeroSignal,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LogFskError>;
