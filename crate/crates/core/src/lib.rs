//! Single-probe metrology of a time-dependent dephasing field.
//!
//! A two-level probe prepared in a superposition accumulates phase under
//! `H = -Omega0 sz + Omega_d sin(omega t + theta) sz`. Pi pulses placed at the
//! zero crossings of the relevant sensitivity waveform rectify that phase, so
//! the Fisher information about the modulation frequency grows as `T^4`
//! instead of `T^2`.
//!
//! - [`dynamics`]: drive, control schedule and accumulated phase.
//! - [`fisher`]: quantum Fisher information and its control bound.
//! - [`experiment`]: Monte-Carlo Ramsey measurements and sensitivity scans.
//! - [`analysis`]: log-log fits and chi-square maps.
//! - [`alp`]: dark matter coupling reach.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alp;
pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod fisher;
pub mod par;
pub mod quad;
pub mod units;

pub use dynamics::{ControlSchedule, DriveParams, IntensityModel, QubitState};
pub use error::{Error, Result};
pub use experiment::{NoiseModel, Protocol, ScanGrid, SensitivityPoint};
pub use fisher::{EstimationTarget, QfiCurve};

/// Crate version, recorded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
