use thiserror::Error;

/// Errors raised across the library. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("rate {rate} is outside the range where {what} is defined (must be below {limit})")]
    RateOutOfRange {
        what: &'static str,
        rate: f64,
        limit: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: codebook is {expected_m}x{expected_n}, got {m}x{n}")]
    ShapeMismatch {
        expected_m: usize,
        expected_n: usize,
        m: usize,
        n: usize,
    },

    #[error("codebook of {m}x{n} bits exceeds the memory cap of {cap} bits")]
    TooLarge { m: usize, n: usize, cap: u64 },

    #[error("map is not a bijection on 0..{m}")]
    NotBijective { m: usize },

    #[error("TRC sampling gave up on row {row} after {attempts} attempts (n={n}, m={m}, epsilon={epsilon})")]
    AttemptsExhausted {
        row: usize,
        attempts: u64,
        n: usize,
        m: usize,
        epsilon: f64,
    },

    #[error("brute-force joint decoding supports m <= {max}, got m = {m}")]
    TooManyRows { m: usize, max: usize },

    #[error("need at least {needed} cells with observed errors, got {got}")]
    InsufficientErrors { needed: usize, got: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
