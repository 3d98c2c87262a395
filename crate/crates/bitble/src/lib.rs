//! Classical synthesis of block-encoding circuits.
//!
//! `bitble` compiles an arbitrary complex `2^n x 2^n` matrix into a program of
//! single-qubit rotations, CNOTs and SWAPs whose top-left block, after scaling
//! by a normalization factor `alpha`, equals the input matrix. Three binary
//! tree protocols (`bitble1`, `bitble2`, `bitble3`) and a `fable` baseline are
//! provided, together with:
//!
//! - the multiplexor decoupling kernels (Walsh-Hadamard / Gray-code solves and
//!   the permutative and recursive demultiplexors),
//! - rotation-Y / rotation-Z binary tree state preparation,
//! - a gate-list IR with threshold compression and OpenQASM 2.0 export,
//! - a dense statevector oracle that measures the block-encoding error of any
//!   produced circuit,
//! - matrix generators (discretized Laplacians, CSV, PGM/PPM images, seeded
//!   random matrices) and a batch CLI.
//!
//! # Example
//!
//! ```
//! use bitble::generators::laplacian_1d;
//! use bitble::protocols::{synthesize, Protocol};
//! use bitble::simulate::verify_block;
//!
//! let a = laplacian_1d(2, false);
//! let enc = synthesize(&a, Protocol::Bitble1, 0.5, Some(0.0)).unwrap();
//! let eps = verify_block(&enc.circuit, &a, enc.alpha, enc.ancilla).unwrap();
//! assert!(eps < 1e-10);
//! ```

pub mod circuit;
pub mod cli;
pub mod demux;
pub mod generators;
pub mod matrix;
pub mod numerics;
pub mod protocols;
pub mod simulate;
pub mod state_prep;

pub use circuit::{Circuit, Gate, GateCounts};
pub use matrix::ComplexMatrix;
pub use protocols::{synthesize, EncodingResult, Protocol};

/// Errors produced by the synthesis toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
