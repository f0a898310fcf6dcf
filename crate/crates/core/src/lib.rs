//! Kernel for studying what transmission loss gives an eavesdropper in
//! single-photon QKD (4-state BB84, 6-state BB84, B92).
//!
//! The crate is `no_std` + `alloc`. It covers:
//!
//! - [`qmath`]: small dense complex linear algebra, von Neumann entropy,
//!   Holevo and Helstrom metrics.
//! - [`states`]: signal states, protocol families and Bob's measurement bases.
//! - [`channel`]: the lossy channel map and detector inefficiency, kept as two
//!   distinct mechanisms.
//! - [`attack`]: identical individual attacks described by probe kets, their
//!   constraint residuals, no-count filtering, and probabilistic re-send
//!   attacks including the USD intercept-resend attack on B92.
//! - [`analysis`]: post-selected QBER and Eve-information figures.
//! - [`montecarlo`]: trajectory-level protocol simulation.
//! - [`search`]: derivative-free search over feasible attacks.
//!
//! File formats, manifests and the command line live in the `qkdloss` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod attack;
pub mod channel;
mod error;
pub mod montecarlo;
pub mod qmath;
pub mod rng;
pub mod search;
pub mod states;

pub use error::{Error, Result};
