//! Interference-alignment beamforming for K-user single-antenna
//! frequency-selective interference channels.
//!
//! The crate builds the simplex-budget alignment design (users' beams are
//! monomials in diagonal composite channels), certifies its alignment and
//! rank conditions, simulates a zero-forcing link to recover the
//! multiplexing gain as a high-SNR slope, and evaluates the exact gain
//! formulas against the original box-budget scheme.

// `!(x > tol)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamformer;
pub mod channel;
pub mod dof;
pub mod error;
pub mod fileio;
pub mod linksim;
pub mod numerics;
pub mod verifier;

pub use error::{Error, Result};
