//! Numerical toolkit for studying how diagonal state space models should be
//! initialized.
//!
//! - [`ssm`]: ZOH-discretized diagonal SSM, kernels, forward pass and the
//!   Vandermonde factorization of the output map.
//! - [`init`]: S4D-Lin / S4D-Real nodes, zero-real-part fractions and
//!   timescale rules.
//! - [`autocorr`]: Gaussian-process inputs, autocorrelation spectra, whitening.
//! - [`stability`]: the `Δ² m² L λ_max` output-magnitude bound and its Monte
//!   Carlo estimate.
//! - [`gram`]: Gram-matrix conditioning and the approximation–estimation
//!   tradeoff.
//! - [`recovery`]: least-squares memory recovery and frequency-node selection.
//! - [`train`]: analytic-gradient Adam training on synthetic memory tasks.
//! - [`cli`]: the `ssmlab` command line.
//!
//! Runnable walkthroughs live in `examples/`.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autocorr;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod gram;
pub mod init;
pub mod linalg;
pub mod output;
pub mod recovery;
pub mod ssm;
pub mod stability;
pub mod train;

pub use error::{Error, Result};
