//! Link-level simulation.

pub mod amc;
pub mod polar;
pub mod qam;
pub mod sim;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlsError {
    #[error("block length {0} is not a power of two of at least 2")]
    BlockLength(usize),
    #[error("{info} information bits do not fit a {block}-bit codeword with a 16-bit checksum")]
    InfoLength { info: usize, block: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

pub use amc::{amc_select, ModCodePair, Modulation};
pub use sim::{simulate_block, weighted_throughput, LinkPlan, LlsBlockResult};
