//! Quanvolutional filters on a dense statevector simulator.
//!
//! The crate covers the whole preprocessing and training pipeline:
//!
//! * [`sim`]: statevector simulation, gate matrices and decoders.
//! * [`circuit`]: rotational, threshold, higher-order, Henderson and
//!   integrated filter circuits, with a JSON schema.
//! * [`quantize`]: N-level quantisation, patch census and the memo table.
//! * [`layer`]: the quanvolutional layer and feature files.
//! * [`expr`]: expressibility against the Haar ensemble.
//! * [`nn`]: the classical head (conv, pool, dropout, dense, Adam).
//! * [`data`] and [`pipeline`]: dataset I/O, synthetic data and end-to-end runs.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod data;
mod error;
pub mod expr;
pub mod image;
pub mod layer;
pub mod nn;
pub mod par;
pub mod pipeline;
pub mod quantize;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
