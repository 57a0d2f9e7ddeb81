//! Minimum-SNR determination for finite-blocklength short-packet links and
//! resource allocation built on it.
//!
//! The central object is the exponential approximation recursion (EAR)
//! function, an explicit upper bound on the implicit minimum SNR whose
//! iteration converges quadratically. [`solvers`] runs it against bisection
//! and fixed-point baselines, [`analysis`] certifies its convergence and
//! convexity properties, and [`mm`] uses it as a majorizing surrogate to
//! optimize packet sizes and error rates in the [`applications`].

// `!(x > 0.0)` is the idiom used throughout to reject NaN together with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod applications;
pub mod config;
pub mod error;
pub mod flops;
pub mod mm;
pub mod scalar;
pub mod solvers;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use scalar::{Snr, TransmissionParams};
pub use solvers::{Method, SolverTrace};
