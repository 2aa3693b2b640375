//! Link-level building blocks for distributed iterative detection in a
//! multi-cell uplink where base stations cooperate over a metered backhaul.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: coupling matrix, fading draws, noise calibration and the
//!   received-signal model (single- and multi-antenna).
//! - [`coding`]: the per-user bit pipeline (rate-1/2 `[7,5]` convolutional
//!   code, interleaver, Gray QPSK) and the max-log-MAP decoder.
//! - [`detection`]: soft demapping and the probability machinery that turns
//!   decoder LLRs into symbol posteriors, soft symbols and candidate lists.
//! - [`cancellation`]: soft, hard and list-selected interference replicas.
//! - [`network`]: base-station nodes, the selection unit, the iteration
//!   schedule and backhaul accounting.

pub mod cancellation;
pub mod channel;
pub mod coding;
pub mod detection;
mod error;
pub mod network;

pub use error::{Error, Result};
pub use num_complex::Complex64;
