//! Two-photon interference between two non-identical pulsed single-photon
//! emitters.
//!
//! The crate is `no_std` (with `alloc`) and contains everything that is pure
//! computation:
//!
//! * [`params`]: emitter, interferometer and detector descriptions.
//! * [`correlation`]: analytic coincidence densities for the zero-delay and
//!   side peaks, coalescence bounds and detector convolution.
//! * [`areas`]: peak areas and the interference metrics derived from them.
//! * [`montecarlo`]: pulse-by-pulse photon simulation producing time tags.
//! * [`analysis`]: time-tag correlation histograms and peak integration.
//! * [`fitting`]: Lorentzian linewidth and IRF-convolved decay fits.
//!
//! File formats, parallel drivers and the command line live in the `homsim`
//! crate.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod areas;
pub mod calibration;
pub mod correlation;
mod error;
pub mod fitting;
pub(crate) mod math;
pub mod montecarlo;
pub mod params;
pub mod presets;

pub use areas::{Estimate, PeakAreas};
pub use correlation::{CorrelationCurve, TauGrid};
pub use error::{Error, Result};
pub use params::{
    DarkState, DetectorParams, EmitterParams, IrfShape, Polarization, SetupParams,
};
