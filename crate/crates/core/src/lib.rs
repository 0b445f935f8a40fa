//! Downlink precoding for cell-free massive MIMO when every AP combines its
//! timely local channel with a delayed copy of the global channel.
//!
//! The crate simulates user drops ([`scenario`]), aged Rayleigh channel pairs
//! ([`channel`]), the optimal team MMSE precoder and four baselines
//! ([`precoding`]), and scores them by the team MSE objective and
//! hardening-bound ergodic rates ([`evaluation`]). [`harness`] runs whole
//! experiments deterministically from a JSON config.

pub mod channel;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod precoding;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
