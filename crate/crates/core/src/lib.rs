//! Error-exponent bounds for the bee-identification problem, where a known
//! barcode codebook is row-permuted and sent through a binary symmetric
//! channel, and the receiver must recover the permutation.
//!
//! - [`exponents`]: closed-form rates, distances and the five exponent bounds.
//! - [`codebook`]: bit-packed codebooks, RCE/TRC sampling, distance scans.
//! - [`channel`]: uniform permutation followed by BSC noise.
//! - [`decoders`]: independent, joint (assignment), brute-force and GMD decoders.
//! - [`montecarlo`]: reproducible parallel error-rate estimation.
//! - [`verify`] and [`cli`]: self-checks and the `beeid` command line.

pub mod channel;
pub mod cli;
pub mod codebook;
pub mod decoders;
pub mod error;
pub mod exponents;
pub mod montecarlo;
pub mod verify;

pub use error::{Error, Result};
