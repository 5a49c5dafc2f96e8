//! Hybrid analog/digital beamforming for a full-duplex integrated access and
//! backhaul (IAB) relay.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: clustered mmWave channels and the near-field
//!   self-interference (SI) channel between the co-located IAB arrays.
//! - [`analog`]: closed-form constrained trace minimisers for the IAB RF
//!   beamformers, MMSE / regularised-ZF RF filters at the UE and gNB, and the
//!   constant-amplitude projection.
//! - [`digital`]: the baseband stage, the alternating hybrid design loop, the
//!   all-digital benchmark and the SI-agnostic baselines.
//! - [`metrics`]: log-det spectral efficiencies, the SI-free upper bound,
//!   effective SI power and the flop model.
//! - [`harness`]: configuration, Monte Carlo sweeps and CSV export.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analog;
pub mod channel;
pub mod config;
pub mod digital;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod matfile;
pub mod metrics;

pub use error::{Error, Result};

/// Dense complex matrix used for every channel and beamformer.
pub type ComplexMatrix = nalgebra::DMatrix<num_complex::Complex64>;

pub use num_complex::Complex64;
