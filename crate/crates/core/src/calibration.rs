//! Solving the unpublished setup parameters (uniform background and
//! interference visibility) from measured coalescence and coincidence
//! ratios, and translating background into detector dark counts.
//!
//! With peak areas taken over full repetition-period windows,
//!
//! ```text
//! A⊥ = a0 + b B0      B = (1 + b) B0      A∥ = A⊥ - I
//! ```
//!
//! where `a0` is the incoherent centre area, `B0` the background-free side
//! area, `b` the background rate and `I = ½ η1η2 p1p2 M² Pc,max` the
//! interference area. Fixing `Pc = I/A⊥` and `A∥/B` determines `b` and `M²`.

use serde::{Deserialize, Serialize};

use crate::correlation::max_coalescence;
use crate::math;
use crate::params::EmitterParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub background_rate: f64,
    /// Squared mode overlap `M²`.
    pub visibility: f64,
}

impl Calibration {
    pub fn mode_overlap(&self) -> f64 {
        math::sqrt(self.visibility)
    }
}

/// Incoherent centre area and side area, both without background.
pub fn peak_areas_without_background(e1: &EmitterParams, e2: &EmitterParams) -> (f64, f64) {
    let (n1, n2) = (e1.mean_photons(), e2.mean_photons());
    let a0 = 0.5 * n1 * n2 + 0.25 * (e1.multiphoton_residual * n1 * n1 + e2.multiphoton_residual * n2 * n2);
    (a0, 0.25 * math::sq(n1 + n2))
}

/// Background rate and visibility reproducing coalescence `pc` and parallel
/// ratio `ratio_par = A∥/B`.
pub fn calibrate(e1: &EmitterParams, e2: &EmitterParams, pc: f64, ratio_par: f64) -> Result<Calibration> {
    if !(pc > 0.0 && pc < 1.0) {
        return Err(Error::invalid("pc", "must lie in (0, 1)"));
    }
    if !(ratio_par > 0.0) {
        return Err(Error::invalid("ratio_par", "must be positive"));
    }
    let (a0, b0) = peak_areas_without_background(e1, e2);
    let denom = b0 * (ratio_par - (1.0 - pc));
    if denom == 0.0 {
        return Err(Error::ZeroDenominator("ratio_par - (1 - pc)"));
    }
    let background_rate = (a0 * (1.0 - pc) - ratio_par * b0) / denom;
    if !(background_rate >= 0.0) {
        return Err(Error::invalid("background_rate", "targets imply a negative background"));
    }
    let interference_area = pc * (a0 + background_rate * b0);
    let scale = 0.5
        * e1.efficiency
        * e2.efficiency
        * e1.prompt_fraction()
        * e2.prompt_fraction()
        * max_coalescence(e1, e2)?;
    if scale == 0.0 {
        return Err(Error::ZeroDenominator("interference scale"));
    }
    let visibility = interference_area / scale;
    if visibility > 1.0 {
        return Err(Error::invalid("visibility", "targets need more interference than the emitters allow"));
    }
    Ok(Calibration { background_rate, visibility })
}

/// Background rate (fraction of the side area per period) produced by
/// uncorrelated dark counts at `dark_rate` per ps in each detector, when each
/// detector also sees `photons_per_channel` photons per pulse.
pub fn background_from_dark_rate(dark_rate: f64, photons_per_channel: f64, rep_period: f64) -> f64 {
    let x = dark_rate * rep_period / photons_per_channel;
    2.0 * x + x * x
}

/// Inverse of [`background_from_dark_rate`].
pub fn dark_rate_for_background(background_rate: f64, photons_per_channel: f64, rep_period: f64) -> f64 {
    let x = math::sqrt(1.0 + background_rate) - 1.0;
    x * photons_per_channel / rep_period
}

/// Mean photons reaching each output port per pulse.
pub fn photons_per_channel(e1: &EmitterParams, e2: &EmitterParams) -> f64 {
    0.5 * (e1.mean_photons() + e2.mean_photons())
}
