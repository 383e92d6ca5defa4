//! Parameter sets for the two emitters and the setup of the reference
//! experiment: a trion line (QD1) and a neutral exciton line with a dark
//! state (QD2), pulsed at 76.1 MHz and detected by APDs whose pairwise
//! timing response is 640 ps FWHM.

use crate::params::{DetectorParams, EmitterParams, IrfShape, Polarization, SetupParams};

pub const REP_PERIOD_PS: f64 = 13_140.0;
pub const PAIR_IRF_FWHM_PS: f64 = 640.0;
pub const SPECTROMETER_FWHM_GHZ: f64 = 0.15;

pub const QD1_T1_PS: f64 = 610.0;
pub const QD1_T2_PS: f64 = 580.0;
pub const QD2_T1_PS: f64 = 950.0;
pub const QD2_T2_PS: f64 = 390.0;
pub const QD1_LINEWIDTH_GHZ: f64 = 0.55;
pub const QD2_LINEWIDTH_GHZ: f64 = 0.81;
pub const QD2_DARK_LIFETIME_PS: f64 = 4_000.0;
/// Not reported; chosen so the slow tail is clearly resolved.
pub const QD2_DARK_FRACTION: f64 = 0.15;
pub const QD1_RESIDUAL: f64 = 0.09;
pub const QD2_RESIDUAL: f64 = 0.07;
pub const MODE_OVERLAP: f64 = 0.95;

/// Reported results the reproduction is compared against.
pub mod reported {
    pub const PC_MAX: f64 = 0.29;
    pub const PC: (f64, f64) = (0.181, 0.004);
    pub const PC_POST: (f64, f64) = (0.47, 0.06);
    pub const PC_POST_IDEAL: (f64, f64) = (0.96, 0.04);
    pub const RATIO_PAR_B: (f64, f64) = (0.481, 0.002);
    pub const CLASSICAL_LIMIT: f64 = 0.5;
    pub const QD1_T2: (f64, f64) = (580.0, 20.0);
    pub const QD2_T2: (f64, f64) = (390.0, 20.0);
    pub const QD1_T1: (f64, f64) = (610.0, 5.0);
    pub const QD2_T1: (f64, f64) = (950.0, 5.0);
    pub const QD2_DARK: (f64, f64) = (4_000.0, 500.0);
}

/// Ideal single-photon versions used for the interference model.
pub fn qd1() -> EmitterParams {
    EmitterParams::new(QD1_T1_PS, QD1_T2_PS)
}

pub fn qd2() -> EmitterParams {
    EmitterParams::new(QD2_T1_PS, QD2_T2_PS)
}

/// With the measured autocorrelation residuals.
pub fn qd1_measured() -> EmitterParams {
    qd1().with_residual(QD1_RESIDUAL)
}

pub fn qd2_measured() -> EmitterParams {
    qd2().with_residual(QD2_RESIDUAL)
}

/// QD2 including the dark-state repopulation seen in its decay.
pub fn qd2_with_dark_state() -> EmitterParams {
    qd2().with_dark_state(QD2_DARK_LIFETIME_PS, QD2_DARK_FRACTION)
}

pub fn setup(polarization: Polarization) -> SetupParams {
    SetupParams::new(MODE_OVERLAP, polarization, REP_PERIOD_PS)
}

pub fn detector() -> DetectorParams {
    DetectorParams::from_combined_fwhm(IrfShape::Gaussian, PAIR_IRF_FWHM_PS)
}
