//! Physical descriptions of the emitters, the interferometer and the
//! detectors. All durations are picoseconds and all angular frequencies are
//! rad/ps.

use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

/// Relative slack allowed on `t2 <= 2 t1`.
pub const LIFETIME_LIMIT_TOL: f64 = 1e-9;

/// Slow repopulation through a dark state; turns the decay biexponential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkState {
    #[serde(rename = "slow_lifetime_ps")]
    pub slow_lifetime: f64,
    pub slow_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterParams {
    /// Excited-state lifetime T1.
    #[serde(rename = "t1_ps")]
    pub t1: f64,
    /// Coherence time T2.
    #[serde(rename = "t2_ps")]
    pub t2: f64,
    /// Centre-frequency offset from a common reference.
    #[serde(rename = "detuning_rad_per_ps", default)]
    pub detuning: f64,
    /// Probability that a pulse yields a detected photon.
    #[serde(default = "one")]
    pub efficiency: f64,
    /// The emitter's own g2(0) as a fraction of the side-peak level.
    #[serde(default)]
    pub multiphoton_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark_state: Option<DarkState>,
}

fn one() -> f64 {
    1.0
}

fn check_unit(field: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::invalid(field, alloc::format!("{v} is outside [0, 1]")));
    }
    Ok(())
}

fn check_positive(field: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid(field, alloc::format!("{v} must be positive and finite")));
    }
    Ok(())
}

impl EmitterParams {
    /// An ideal emitter: unit efficiency, no residual, no dark state.
    pub fn new(t1: f64, t2: f64) -> Self {
        EmitterParams {
            t1,
            t2,
            detuning: 0.0,
            efficiency: 1.0,
            multiphoton_residual: 0.0,
            dark_state: None,
        }
    }

    pub fn lifetime_limited(t1: f64) -> Self {
        Self::new(t1, 2.0 * t1)
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_efficiency(mut self, efficiency: f64) -> Self {
        self.efficiency = efficiency;
        self
    }

    pub fn with_residual(mut self, residual: f64) -> Self {
        self.multiphoton_residual = residual;
        self
    }

    pub fn with_dark_state(mut self, slow_lifetime: f64, slow_fraction: f64) -> Self {
        self.dark_state = Some(DarkState { slow_lifetime, slow_fraction });
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("t1_ps", self.t1)?;
        check_positive("t2_ps", self.t2)?;
        if self.t2 > 2.0 * self.t1 * (1.0 + LIFETIME_LIMIT_TOL) {
            return Err(Error::NegativeDephasing { t2: self.t2, two_t1: 2.0 * self.t1 });
        }
        if !self.detuning.is_finite() {
            return Err(Error::invalid("detuning_rad_per_ps", "must be finite"));
        }
        check_unit("efficiency", self.efficiency)?;
        check_unit("multiphoton_residual", self.multiphoton_residual)?;
        // Residuals above 1/2 cannot be produced by an extra-photon process.
        if self.multiphoton_residual > 0.5 {
            return Err(Error::invalid("multiphoton_residual", "must not exceed 0.5"));
        }
        if let Some(ds) = self.dark_state {
            check_positive("dark_state.slow_lifetime_ps", ds.slow_lifetime)?;
            check_unit("dark_state.slow_fraction", ds.slow_fraction)?;
        }
        Ok(())
    }

    /// Radiative decay rate 1/T1.
    #[inline]
    pub fn decay_rate(&self) -> f64 {
        1.0 / self.t1
    }

    /// Coherence decay rate 1/T2.
    #[inline]
    pub fn coherence_rate(&self) -> f64 {
        1.0 / self.t2
    }

    /// Fraction of photons emitted through the prompt (bright-state) channel.
    #[inline]
    pub fn prompt_fraction(&self) -> f64 {
        self.dark_state.map_or(1.0, |d| 1.0 - d.slow_fraction)
    }

    /// Probability of an additional independent photon per pulse that gives
    /// an autocorrelation centre/side ratio equal to `multiphoton_residual`.
    ///
    /// With extra-photon probability q the ratio is 2q/(1+q)^2; this is its
    /// inverse on q in [0, 1].
    pub fn extra_photon_probability(&self) -> f64 {
        let r = self.multiphoton_residual;
        if r <= 0.0 {
            return 0.0;
        }
        ((1.0 - r) - math::sqrt((1.0 - 2.0 * r).max(0.0))) / r
    }

    /// Mean detected photons per pulse, extra photons included.
    #[inline]
    pub fn mean_photons(&self) -> f64 {
        self.efficiency * (1.0 + self.extra_photon_probability())
    }
}

/// Pure dephasing rate 1/T2 - 1/(2 T1), in ps⁻¹.
pub fn pure_dephasing_rate(e: &EmitterParams) -> Result<f64> {
    e.validate()?;
    let g = 1.0 / e.t2 - 0.5 / e.t1;
    // t2 == 2 t1 within tolerance counts as lifetime limited.
    Ok(g.max(0.0))
}

/// ps per GHz⁻¹.
const PS_PER_NS: f64 = 1.0e3;

/// Coherence time of a Lorentzian line, T2 = 1/(π Δν).
pub fn t2_from_linewidth(fwhm_ghz: f64) -> Result<f64> {
    check_positive("fwhm_ghz", fwhm_ghz)?;
    Ok(PS_PER_NS / (math::PI * fwhm_ghz))
}

/// Inverse of [`t2_from_linewidth`].
pub fn linewidth_from_t2(t2_ps: f64) -> Result<f64> {
    check_positive("t2_ps", t2_ps)?;
    Ok(PS_PER_NS / (math::PI * t2_ps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    Parallel,
    Orthogonal,
}

impl Polarization {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::Parallel => "parallel",
            Polarization::Orthogonal => "orthogonal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupParams {
    /// Amplitude overlap M of the two input modes; the two-photon
    /// interference visibility is M².
    pub mode_overlap: f64,
    pub polarization: Polarization,
    #[serde(rename = "rep_period_ps")]
    pub rep_period: f64,
    /// Uniform accidental coincidences. Over one repetition period the
    /// background adds `background_rate` times the background-free side-peak
    /// area.
    #[serde(default)]
    pub background_rate: f64,
}

impl SetupParams {
    pub fn new(mode_overlap: f64, polarization: Polarization, rep_period: f64) -> Self {
        SetupParams { mode_overlap, polarization, rep_period, background_rate: 0.0 }
    }

    pub fn with_polarization(mut self, polarization: Polarization) -> Self {
        self.polarization = polarization;
        self
    }

    pub fn with_background(mut self, background_rate: f64) -> Self {
        self.background_rate = background_rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("mode_overlap", self.mode_overlap)?;
        check_positive("rep_period_ps", self.rep_period)?;
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(Error::invalid("background_rate", "must be non-negative"));
        }
        Ok(())
    }

    /// Two-photon interference visibility M².
    #[inline]
    pub fn visibility(&self) -> f64 {
        self.mode_overlap * self.mode_overlap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrfShape {
    Gaussian,
    TwoSidedExponential,
    Delta,
}

/// Half-maximum point x of (1 + x) e^{-x}, the autocorrelation of a
/// two-sided exponential with unit scale.
const LAPLACE_PAIR_HALF_MAX: f64 = 1.678_346_990_016_660_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    /// Single-detector timing response FWHM. The response on a time
    /// difference between two detectors is this response convolved with its
    /// mirror image.
    #[serde(rename = "irf_fwhm_ps")]
    pub irf_fwhm: f64,
    pub irf_shape: IrfShape,
    /// Dark counts per ps per channel.
    #[serde(rename = "dark_rate_per_ps", default)]
    pub dark_rate: f64,
}

impl DetectorParams {
    pub fn ideal() -> Self {
        DetectorParams { irf_fwhm: 0.0, irf_shape: IrfShape::Delta, dark_rate: 0.0 }
    }

    pub fn gaussian(irf_fwhm: f64) -> Self {
        DetectorParams { irf_fwhm, irf_shape: IrfShape::Gaussian, dark_rate: 0.0 }
    }

    /// Detector pair whose time-difference response has FWHM `combined_fwhm`.
    pub fn from_combined_fwhm(shape: IrfShape, combined_fwhm: f64) -> Self {
        let irf_fwhm = match shape {
            IrfShape::Gaussian => combined_fwhm / math::SQRT_2,
            IrfShape::TwoSidedExponential => {
                combined_fwhm * math::LN_2 / LAPLACE_PAIR_HALF_MAX
            }
            IrfShape::Delta => 0.0,
        };
        DetectorParams { irf_fwhm, irf_shape: shape, dark_rate: 0.0 }
    }

    pub fn with_dark_rate(mut self, dark_rate: f64) -> Self {
        self.dark_rate = dark_rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.irf_fwhm >= 0.0 && self.irf_fwhm.is_finite()) {
            return Err(Error::invalid("irf_fwhm_ps", "must be non-negative"));
        }
        match self.irf_shape {
            IrfShape::Delta if self.irf_fwhm != 0.0 => {
                return Err(Error::invalid("irf_fwhm_ps", "delta response requires zero width"));
            }
            IrfShape::Gaussian | IrfShape::TwoSidedExponential if self.irf_fwhm == 0.0 => {
                return Err(Error::invalid("irf_fwhm_ps", "use the delta shape for zero width"));
            }
            _ => {}
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::invalid("dark_rate_per_ps", "must be non-negative"));
        }
        Ok(())
    }

    /// FWHM of the two-detector time-difference response.
    pub fn combined_fwhm(&self) -> f64 {
        match self.irf_shape {
            IrfShape::Gaussian => self.irf_fwhm * math::SQRT_2,
            IrfShape::TwoSidedExponential => {
                self.irf_fwhm / math::LN_2 * LAPLACE_PAIR_HALF_MAX
            }
            IrfShape::Delta => 0.0,
        }
    }

    pub fn is_delta(&self) -> bool {
        self.irf_shape == IrfShape::Delta
    }

    /// Gaussian sigma or two-sided-exponential scale of one detector.
    pub(crate) fn single_scale(&self) -> f64 {
        match self.irf_shape {
            IrfShape::Gaussian => self.irf_fwhm / math::GAUSS_FWHM_PER_SIGMA,
            IrfShape::TwoSidedExponential => self.irf_fwhm / (2.0 * math::LN_2),
            IrfShape::Delta => 0.0,
        }
    }
}
