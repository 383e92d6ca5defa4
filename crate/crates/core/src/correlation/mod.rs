//! Analytic two-source coincidence densities.
//!
//! Each emitter radiates a wavepacket with intensity envelope
//! `p(t) = Γ e^{-Γt}` and first-order coherence decaying as `e^{-γ τ}` with
//! `γ = 1/T2`. Integrating the two-time correlation over the emission time
//! gives, for the zero-delay peak,
//!
//! ```text
//! C⊥(τ) = ¼ n1 n2 K (e^{-Γ1|τ|} + e^{-Γ2|τ|}) + residual terms
//! C∥(τ) = C⊥(τ) - ½ η1 η2 M² K e^{-(γ1+γ2)|τ|} cos(Δτ)
//! K     = Γ1 Γ2 / (Γ1 + Γ2)
//! ```
//!
//! where `n` is the mean photon number per pulse, `η` the efficiency and `M`
//! the amplitude mode overlap. Dark-state (slow) photons contribute to the
//! incoherent terms through their own envelope but do not interfere.

mod curve;
mod irf;

pub use curve::{CorrelationCurve, TauGrid};
pub use irf::{convolve_with_irf, pair_response_cdf};

pub use crate::params::{linewidth_from_t2, pure_dephasing_rate, t2_from_linewidth};

use alloc::vec::Vec;

use crate::math;
use crate::params::{EmitterParams, Polarization, SetupParams};
use crate::{Error, Result};

/// Mixture of one-sided exponentials `Σ w Γ e^{-Γt}`.
#[derive(Debug, Clone, Copy)]
struct Envelope {
    comps: [(f64, f64); 2],
    len: usize,
}

impl Envelope {
    fn of(e: &EmitterParams) -> Self {
        match e.dark_state {
            Some(ds) if ds.slow_fraction > 0.0 => Envelope {
                comps: [(1.0 - ds.slow_fraction, e.decay_rate()), (ds.slow_fraction, 1.0 / ds.slow_lifetime)],
                len: 2,
            },
            _ => Envelope { comps: [(1.0, e.decay_rate()), (0.0, 0.0)], len: 1 },
        }
    }

    fn comps(&self) -> &[(f64, f64)] {
        &self.comps[..self.len]
    }
}

/// Density of `t_b - t_a` with `t_a ~ a`, `t_b ~ b` independent.
fn cross_density(a: &Envelope, b: &Envelope, s: f64) -> f64 {
    let mut sum = 0.0;
    for &(wa, ra) in a.comps() {
        for &(wb, rb) in b.comps() {
            let k = ra * rb / (ra + rb);
            let tail = if s >= 0.0 { math::exp(-rb * s) } else { math::exp(ra * s) };
            sum += wa * wb * k * tail;
        }
    }
    sum
}

/// Precomputed two-source correlation model.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    env: [Envelope; 2],
    mean_photons: [f64; 2],
    residual: [f64; 2],
    interference_amplitude: f64,
    interference_rate: f64,
    detuning_difference: f64,
    background_density: f64,
    rep_period: f64,
}

impl CorrelationModel {
    pub fn new(e1: &EmitterParams, e2: &EmitterParams, setup: &SetupParams) -> Result<Self> {
        e1.validate()?;
        e2.validate()?;
        setup.validate()?;
        let (g1, g2) = (e1.decay_rate(), e2.decay_rate());
        let k = g1 * g2 / (g1 + g2);
        let interference_amplitude = match setup.polarization {
            Polarization::Parallel => {
                0.5 * e1.efficiency
                    * e2.efficiency
                    * setup.visibility()
                    * e1.prompt_fraction()
                    * e2.prompt_fraction()
                    * k
            }
            Polarization::Orthogonal => 0.0,
        };
        let mean_photons = [e1.mean_photons(), e2.mean_photons()];
        let side_area = 0.25 * math::sq(mean_photons[0] + mean_photons[1]);
        Ok(CorrelationModel {
            env: [Envelope::of(e1), Envelope::of(e2)],
            mean_photons,
            residual: [e1.multiphoton_residual, e2.multiphoton_residual],
            interference_amplitude,
            interference_rate: e1.coherence_rate() + e2.coherence_rate(),
            detuning_difference: e1.detuning - e2.detuning,
            background_density: setup.background_rate * side_area / setup.rep_period,
            rep_period: setup.rep_period,
        })
    }

    /// Zero-delay peak without interference and without background.
    pub fn center_incoherent(&self, tau: f64) -> f64 {
        let [n1, n2] = self.mean_photons;
        let [e1, e2] = &self.env;
        let cross = 0.25 * n1 * n2 * (cross_density(e1, e2, tau) + cross_density(e1, e2, -tau));
        cross + self.residual_term(tau)
    }

    /// Multi-photon contribution: residual times each emitter's own
    /// side-peak pairing.
    pub fn residual_term(&self, tau: f64) -> f64 {
        let mut sum = 0.0;
        for i in 0..2 {
            if self.residual[i] > 0.0 {
                let n = self.mean_photons[i];
                sum += self.residual[i] * 0.25 * n * n * cross_density(&self.env[i], &self.env[i], tau);
            }
        }
        sum
    }

    /// Interference term subtracted from the parallel zero-delay peak.
    pub fn interference(&self, tau: f64) -> f64 {
        if self.interference_amplitude == 0.0 {
            return 0.0;
        }
        self.interference_amplitude
            * math::exp(-self.interference_rate * math::abs(tau))
            * math::cos(self.detuning_difference * tau)
    }

    /// Zero-delay peak without background.
    pub fn center(&self, tau: f64) -> f64 {
        (self.center_incoherent(tau) - self.interference(tau)).max(0.0)
    }

    /// One side peak (photons from different pulses) at offset `s` from its
    /// centre, without background.
    pub fn side(&self, s: f64) -> f64 {
        let mut sum = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                sum += self.mean_photons[i] * self.mean_photons[j] * cross_density(&self.env[i], &self.env[j], s);
            }
        }
        0.25 * sum
    }

    /// Single ordered pairing (emitter `i` first pulse, emitter `j` later
    /// pulse) of a side peak.
    pub fn side_pairing(&self, i: usize, j: usize, s: f64) -> f64 {
        0.25 * self.mean_photons[i] * self.mean_photons[j] * cross_density(&self.env[i], &self.env[j], s)
    }

    pub fn background_density(&self) -> f64 {
        self.background_density
    }

    /// Background-free side-peak area.
    pub fn side_area(&self) -> f64 {
        0.25 * math::sq(self.mean_photons[0] + self.mean_photons[1])
    }

    pub fn rep_period(&self) -> f64 {
        self.rep_period
    }

    /// Full density at delay `tau` including `n_side` side peaks per side.
    pub fn full(&self, tau: f64, n_side: usize) -> f64 {
        let mut v = self.center(tau) + self.background_density;
        for k in 1..=n_side as i64 {
            let off = k as f64 * self.rep_period;
            v += self.side(tau - off) + self.side(tau + off);
        }
        v
    }
}

/// Unnormalized coincidence density of the τ = 0 peak, background included.
pub fn center_peak_density(
    tau: f64,
    e1: &EmitterParams,
    e2: &EmitterParams,
    setup: &SetupParams,
) -> Result<f64> {
    let m = CorrelationModel::new(e1, e2, setup)?;
    Ok(m.center(tau) + m.background_density())
}

/// Coincidence density of a side peak at offset from its centre, background
/// included.
pub fn side_peak_density(
    tau_from_peak_center: f64,
    e1: &EmitterParams,
    e2: &EmitterParams,
    setup: &SetupParams,
) -> Result<f64> {
    let m = CorrelationModel::new(e1, e2, setup)?;
    Ok(m.side(tau_from_peak_center) + m.background_density())
}

/// Evaluates the centre peak, `n_side_peaks` side peaks per side and the
/// uniform background on `grid`.
pub fn full_correlation(
    grid: &TauGrid,
    e1: &EmitterParams,
    e2: &EmitterParams,
    setup: &SetupParams,
    n_side_peaks: usize,
) -> Result<CorrelationCurve> {
    let model = CorrelationModel::new(e1, e2, setup)?;
    let max_spacing = e1.t2.min(e2.t2) / 10.0;
    if grid.spacing > max_spacing {
        return Err(Error::GridTooCoarse { spacing: grid.spacing, max: max_spacing, what: "t2_min / 10" });
    }
    let required = (n_side_peaks as f64 + 0.5) * setup.rep_period;
    if grid.covered_half_span() < required * (1.0 - 1e-12) {
        return Err(Error::GridTooShort { half_span: grid.covered_half_span(), required });
    }
    let tau = grid.points();
    let density: Vec<f64> = tau.iter().map(|&t| model.full(t, n_side_peaks)).collect();
    Ok(CorrelationCurve { tau, density, label: setup.polarization })
}

/// Zero-delay peak only (plus background) on `grid`; no coverage requirement.
pub fn center_peak_curve(
    grid: &TauGrid,
    e1: &EmitterParams,
    e2: &EmitterParams,
    setup: &SetupParams,
) -> Result<CorrelationCurve> {
    let model = CorrelationModel::new(e1, e2, setup)?;
    let tau = grid.points();
    let density = tau.iter().map(|&t| model.center(t) + model.background_density()).collect();
    Ok(CorrelationCurve { tau, density, label: setup.polarization })
}

/// Coalescence probability for perfect overlap and no residuals or
/// background:
/// `2 Γ1Γ2/(Γ1+Γ2) · (γ1+γ2) / ((γ1+γ2)² + Δ²)`.
pub fn max_coalescence(e1: &EmitterParams, e2: &EmitterParams) -> Result<f64> {
    e1.validate()?;
    e2.validate()?;
    let (g1, g2) = (e1.decay_rate(), e2.decay_rate());
    let gamma = e1.coherence_rate() + e2.coherence_rate();
    let delta = e1.detuning - e2.detuning;
    Ok(2.0 * g1 * g2 / (g1 + g2) * gamma / (gamma * gamma + delta * delta))
}
