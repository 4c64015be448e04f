//! Estimation of conditional average treatment effects (CATE) with neural
//! meta-learners and transfer across related experiments.
//!
//! The crate provides:
//!
//! - [`nn`]: dense regression networks with exact gradients and Adam,
//! - [`forest`]: CART regression trees and bagged forests,
//! - [`learners`]: the S, T, X, and Y meta-learners,
//! - [`transfer`]: warm-start, frozen-features, multi-head, joint,
//!   SF-Reptile, and MLRW transfer strategies over experiment collections,
//! - [`dgp`]: simulated and semi-synthetic data-generating processes with
//!   attached ground truth,
//! - [`mnist_io`]: the IDX binary image/label format,
//! - [`harness`]: seeded sweeps producing CATE-MSE tables and learning
//!   curves as CSV.

pub mod data;
pub mod dgp;
pub mod error;
pub mod forest;
pub mod harness;
pub mod learners;
pub mod matrix;
pub mod mnist_io;
pub mod nn;
pub mod seed;
pub mod transfer;

pub use error::{Error, Result};
