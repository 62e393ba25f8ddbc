//! Chunked second-order forward-mode automatic differentiation.
//!
//! The carrier is [`HDual`], a dual number holding a value, a row
//! derivative, and a chunk of `C` column/mixed derivative pairs; one
//! evaluation of a function body over seeded carriers yields `C` Hessian
//! entries of one row at once. On top of it sit:
//!
//! - [`hessian`]: dense Hessian engines (`hessian_full`, `hessian_sym`,
//!   `chunk_hess`, `schunk_hess`),
//! - [`hvp`]: matrix-free Hessian-vector products (`chess_vec`,
//!   `sc_hess_vec`),
//! - [`batch`]: a deterministic multi-threaded batch executor for HVPs,
//! - [`analysis`]: arithmetic-cost prediction, measured operation counts,
//!   and a finite-difference oracle,
//! - [`testfuncs`]: standard benchmark functions.
//!
//! Chunk sizes are compile-time constants; the `_dyn` entry points
//! dispatch a runtime chunk size to a monomorphized engine via
//! [`with_csize!`], for the sizes in [`SUPPORTED_CSIZES`].

pub mod analysis;
pub mod batch;
pub mod error;
pub mod hdual;
pub mod hessian;
pub mod hvp;
pub mod sample;
pub mod scalar;
pub mod testfuncs;

pub use analysis::{
    count_chunk_hess_dyn, count_ops, count_schunk_hess_dyn, fd_gradient, fd_hessian,
    optimal_chunk, CountingScalar, OpCount,
};
pub use batch::{
    default_workers, l0_batch_hvp_dyn, l1_batch_hvp_dyn, l2_batch_hvp_dyn, seq_batch_hvp_dyn,
    BatchData,
};
pub use error::{ChessfadError, Result};
pub use hdual::HDual;
pub use hessian::{
    chunk_hess_dyn, hessian_full, hessian_sym, schunk_hess_dyn, DiffFn, HessianMatrix,
};
pub use hvp::{chess_vec_dyn, sc_hess_vec_dyn};
pub use scalar::{AdNum, Scalar};
pub use testfuncs::Func;

/// Chunk sizes the `_dyn` entry points can dispatch to.
pub const SUPPORTED_CSIZES: [usize; 13] = [1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 16, 24, 32];

/// Dispatch a runtime chunk size to a body monomorphized over `const C`.
///
/// `with_csize!(csize, C => expr)` evaluates `expr` (which must produce a
/// `Result`) with `C` bound to the matching entry of [`SUPPORTED_CSIZES`],
/// or returns `Err(ChessfadError::UnsupportedChunkSize)`.
#[macro_export]
macro_rules! with_csize {
    ($csize:expr, $c:ident => $body:expr) => {
        match $csize {
            1 => {
                const $c: usize = 1;
                $body
            }
            2 => {
                const $c: usize = 2;
                $body
            }
            3 => {
                const $c: usize = 3;
                $body
            }
            4 => {
                const $c: usize = 4;
                $body
            }
            5 => {
                const $c: usize = 5;
                $body
            }
            6 => {
                const $c: usize = 6;
                $body
            }
            7 => {
                const $c: usize = 7;
                $body
            }
            8 => {
                const $c: usize = 8;
                $body
            }
            10 => {
                const $c: usize = 10;
                $body
            }
            12 => {
                const $c: usize = 12;
                $body
            }
            16 => {
                const $c: usize = 16;
                $body
            }
            24 => {
                const $c: usize = 24;
                $body
            }
            32 => {
                const $c: usize = 32;
                $body
            }
            other => Err($crate::error::ChessfadError::UnsupportedChunkSize(other)),
        }
    };
}
