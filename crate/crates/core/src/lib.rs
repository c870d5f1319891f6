//! Spin-qubit gates of trapped ions in a strong magnetic field with a
//! gradient: Coulomb crystals and their normal modes, hyperfine levels of a
//! spin-½ nucleus, gradient-induced spin-spin coupling, time-dependent pulse
//! propagation, chain spectra, Halbach magnets and the RF pseudopotential.
//!
//! All quantities are SI; frequencies are angular (rad/s) unless a name says
//! otherwise.

// `!(x > 0.0)` is used throughout on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod crystal;
pub mod dynamics;
pub mod error;
pub mod hyperfine;
pub mod magnet;
pub mod propagator;
pub mod pseudopotential;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};
