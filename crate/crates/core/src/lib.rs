//! Remote estimation of a low-rank Gaussian field through an energy-harvesting
//! sensor with a finite data buffer and battery.
//!
//! The sensor collects `Q` samples, then spends every joule harvested during
//! the slot to amplify-and-forward the buffer over an AWGN channel. Given an
//! energy realization the MMSE distortion is deterministic, so the crate
//! computes it in closed form, evaluates matrix-Bernstein bounds on its
//! distribution, and checks every bound against seeded Monte-Carlo campaigns.
//!
//! Module map:
//!
//! * [`signal`] - signal families, reduced eigenbases and row-norm coherence.
//! * [`energy`] - i.i.d. arrival processes, slot sums and their tails.
//! * [`estimation`] - transmit gains, MMSE evaluation and campaigns.
//! * [`bounds`] - tail functions, Bounds I/II, the equidistant bound,
//!   offline baselines, frontier search and concentration oracles.
//! * [`experiments`] - configuration, presets and the CLI back end.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod energy;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod linalg;
pub mod rng;
pub mod signal;

pub use bounds::{BoundPoint, Family, Tail};
pub use energy::{ArrivalKind, ArrivalModel, TailMethod, TailProbability};
pub use error::{Error, Result};
pub use estimation::{Campaign, Scheme, TransmissionConfig, TrialRecord};
pub use signal::{BasisKind, SignalModel};

/// Version string recorded in experiment sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
