//! Monte Carlo capacity analysis of MIMO links with zero-forcing (ZF) and
//! MMSE linear receivers over spatially correlated Nakagami-m fading.
//!
//! The crate is layered bottom-up:
//!
//! - [`matkernel`]: complex Hermitian algebra (Gram, Cholesky, inverse, det)
//! - [`fading`]: seeded random streams, gamma/Nakagami/Gaussian variates
//! - [`channel`]: exponential correlation and Kronecker-colored channels
//! - [`receivers`]: per-stream ZF/MMSE SINR and capacity
//! - [`montecarlo`]: trial ensembles, SNR and correlation sweeps, ECDF/PDF
//! - [`cli`]: configuration, CSV output and run manifests

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod error;
pub mod fading;
pub mod matkernel;
pub mod montecarlo;
pub mod receivers;
mod special;

pub use error::{Error, Result};
