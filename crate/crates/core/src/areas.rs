//! Peak areas and the scalars derived from them: coalescence probability,
//! its post-selected variant and the coincidence ratio against the side
//! peaks.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationCurve;
use crate::math;
use crate::{Error, Result};

/// A value with its 1σ uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    pub fn new(value: f64, sigma: f64) -> Self {
        Estimate { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Estimate { value, sigma: 0.0 }
    }

    /// True when `target` lies within `k` standard deviations (with `floor`
    /// as minimum half-width).
    pub fn within(&self, target: f64, k: f64, floor: f64) -> bool {
        math::abs(self.value - target) <= (k * self.sigma).max(floor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakAreas {
    /// A⊥ or A∥ depending on the dataset.
    pub a_center: f64,
    pub sigma_center: f64,
    /// B, the mean side-peak area.
    pub b_side_mean: f64,
    pub sigma_b: f64,
    pub side: Vec<f64>,
    pub sigma_side: Vec<f64>,
}

impl PeakAreas {
    /// Areas of raw counts; each area N carries a Poisson error √N.
    pub fn from_counts(center: f64, side: Vec<f64>) -> Self {
        let sigma_side: Vec<f64> = side.iter().map(|&n| math::sqrt(n.max(0.0))).collect();
        let (b, sigma_b) = if side.is_empty() {
            (0.0, 0.0)
        } else {
            let m = side.len() as f64;
            let total: f64 = side.iter().sum();
            (total / m, math::sqrt(total.max(0.0)) / m)
        };
        PeakAreas {
            a_center: center,
            sigma_center: math::sqrt(center.max(0.0)),
            b_side_mean: b,
            sigma_b,
            side,
            sigma_side,
        }
    }

    /// Areas computed from a noiseless model; all uncertainties zero.
    pub fn exact(center: f64, side: Vec<f64>) -> Self {
        let b = if side.is_empty() { 0.0 } else { side.iter().sum::<f64>() / side.len() as f64 };
        PeakAreas {
            a_center: center,
            sigma_center: 0.0,
            b_side_mean: b,
            sigma_b: 0.0,
            sigma_side: alloc::vec![0.0; side.len()],
            side,
        }
    }

    /// Elementwise sum; side peaks must line up.
    pub fn merged(&self, other: &PeakAreas) -> Result<PeakAreas> {
        if self.side.len() != other.side.len() {
            return Err(Error::BinningMismatch);
        }
        let side: Vec<f64> = self.side.iter().zip(&other.side).map(|(a, b)| a + b).collect();
        let sq = |a: f64, b: f64| math::sqrt(a * a + b * b);
        let sigma_side = self.sigma_side.iter().zip(&other.sigma_side).map(|(a, b)| sq(*a, *b)).collect();
        let m = side.len().max(1) as f64;
        Ok(PeakAreas {
            a_center: self.a_center + other.a_center,
            sigma_center: sq(self.sigma_center, other.sigma_center),
            b_side_mean: side.iter().sum::<f64>() / m,
            sigma_b: sq(self.sigma_b, other.sigma_b),
            side,
            sigma_side,
        })
    }
}

/// Integrates a curve over `±window/2` around 0 and around `k * rep_period`
/// for `k = ±1..=±n_side`.
pub fn curve_peak_areas(curve: &CorrelationCurve, rep_period: f64, window: f64, n_side: usize) -> Result<PeakAreas> {
    if !(window > 0.0) || window > rep_period {
        return Err(Error::InvalidWindow { window, reason: "must lie in (0, rep_period]" });
    }
    let half = 0.5 * window;
    let last = curve.tau[curve.len() - 1];
    if last + 1e-9 < n_side as f64 * rep_period + half || -curve.tau[0] + 1e-9 < n_side as f64 * rep_period + half {
        return Err(Error::NotEnoughSidePeaks { needed: n_side });
    }
    let center = curve.integrate(-half, half);
    let mut side = Vec::with_capacity(2 * n_side);
    for k in 1..=n_side as i64 {
        for c in [-(k as f64) * rep_period, k as f64 * rep_period] {
            side.push(curve.integrate(c - half, c + half));
        }
    }
    Ok(PeakAreas::exact(center, side))
}

/// `(a - b) / a` with first-order propagated error.
fn relative_drop(a: f64, sa: f64, b: f64, sb: f64) -> Estimate {
    let value = (a - b) / a;
    let var = math::sq(sb / a) + math::sq(b * sa / (a * a));
    Estimate::new(value, math::sqrt(var))
}

/// Pc = (A⊥ - A∥) / A⊥. Negative values from noisy input are returned as-is.
pub fn coalescence_probability(areas_perp: &PeakAreas, areas_par: &PeakAreas) -> Result<Estimate> {
    if !(areas_perp.a_center > 0.0) {
        return Err(Error::ZeroDenominator("A_perp"));
    }
    Ok(relative_drop(
        areas_perp.a_center,
        areas_perp.sigma_center,
        areas_par.a_center,
        areas_par.sigma_center,
    ))
}

/// Post-selected coalescence from the curve mass within ±window/2 of τ = 0.
/// A window of one grid step reduces to the τ = 0 point values.
pub fn postselected_coalescence(curve_perp: &CorrelationCurve, curve_par: &CorrelationCurve, window: f64) -> Result<f64> {
    if !curve_perp.same_grid(curve_par) {
        return Err(Error::GridMismatch);
    }
    let h = curve_perp.spacing();
    if !(window >= h * (1.0 - 1e-9)) {
        return Err(Error::InvalidWindow { window, reason: "narrower than the grid spacing" });
    }
    let half = 0.5 * window * (1.0 + 1e-12);
    let (mut perp, mut par, mut n) = (0.0, 0.0, 0usize);
    for ((t, a), b) in curve_perp.tau.iter().zip(&curve_perp.density).zip(&curve_par.density) {
        if math::abs(*t) <= half {
            perp += a;
            par += b;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InvalidWindow { window, reason: "contains no grid points" });
    }
    if !(perp > 0.0) {
        return Err(Error::ZeroDenominator("g_perp(0)"));
    }
    Ok((perp - par) / perp)
}

/// Coincidence ratio A∥ / B against the mean side-peak area.
pub fn coincidence_ratio(areas_par: &PeakAreas) -> Result<Estimate> {
    if areas_par.side.is_empty() {
        return Err(Error::NotEnoughSidePeaks { needed: 1 });
    }
    let b = areas_par.b_side_mean;
    if !(b > 0.0) {
        return Err(Error::ZeroDenominator("B"));
    }
    let a = areas_par.a_center;
    let var = math::sq(areas_par.sigma_center / b) + math::sq(a * areas_par.sigma_b / (b * b));
    Ok(Estimate::new(a / b, math::sqrt(var)))
}
