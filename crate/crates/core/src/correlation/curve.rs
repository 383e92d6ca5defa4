use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::params::Polarization;
use crate::{Error, Result};

/// Symmetric uniform delay grid `k * spacing` for `k = -n..=n`, always
/// containing τ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    pub half_span: f64,
    pub spacing: f64,
}

impl TauGrid {
    pub fn new(half_span: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("spacing", "must be positive"));
        }
        if !(half_span >= 0.0 && half_span.is_finite()) {
            return Err(Error::invalid("half_span", "must be non-negative"));
        }
        Ok(TauGrid { half_span, spacing })
    }

    /// Number of points on each side of zero.
    pub fn half_len(&self) -> usize {
        math::ceil(self.half_span / self.spacing - 1e-9) as usize
    }

    /// Actual covered half-span after rounding up to whole steps.
    pub fn covered_half_span(&self) -> f64 {
        self.half_len() as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.half_len() as i64;
        (-n..=n).map(|k| k as f64 * self.spacing).collect()
    }
}

/// Coincidence density on a uniform delay grid, in coincidences per ps per
/// pulse (or per histogram when scaled).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub tau: Vec<f64>,
    pub density: Vec<f64>,
    pub label: Polarization,
}

impl CorrelationCurve {
    pub fn new(tau: Vec<f64>, density: Vec<f64>, label: Polarization) -> Result<Self> {
        if tau.len() != density.len() {
            return Err(Error::invalid("density", "length differs from tau grid"));
        }
        if tau.len() < 2 {
            return Err(Error::invalid("tau", "need at least two grid points"));
        }
        let h = tau[1] - tau[0];
        if !(h > 0.0) {
            return Err(Error::invalid("tau", "must be strictly increasing"));
        }
        for w in tau.windows(2) {
            let d = w[1] - w[0];
            if !(d > 0.0) || math::abs(d - h) > 1e-6 * h {
                return Err(Error::invalid("tau", "must be strictly increasing with uniform spacing"));
            }
        }
        if density.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::invalid("density", "must be non-negative"));
        }
        Ok(CorrelationCurve { tau, density, label })
    }

    pub fn spacing(&self) -> f64 {
        self.tau[1] - self.tau[0]
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn same_grid(&self, other: &CorrelationCurve) -> bool {
        self.tau.len() == other.tau.len()
            && self
                .tau
                .iter()
                .zip(&other.tau)
                .all(|(a, b)| math::abs(a - b) <= 1e-9 * (1.0 + math::abs(*a)))
    }

    /// Trapezoidal area over the whole grid.
    pub fn area(&self) -> f64 {
        self.integrate(self.tau[0], self.tau[self.len() - 1])
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, tau: f64) -> f64 {
        let h = self.spacing();
        let x = (tau - self.tau[0]) / h;
        if x < 0.0 || x > (self.len() - 1) as f64 {
            return 0.0;
        }
        let i = (math::floor(x) as usize).min(self.len() - 2);
        let f = x - i as f64;
        self.density[i] * (1.0 - f) + self.density[i + 1] * f
    }

    /// Exact integral of the piecewise-linear interpolant over `[lo, hi]`,
    /// clipped to the grid.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let first = self.tau[0];
        let last = self.tau[self.len() - 1];
        let lo = lo.max(first);
        let hi = hi.min(last);
        if hi <= lo {
            return 0.0;
        }
        let h = self.spacing();
        let i0 = ((math::floor((lo - first) / h)) as usize).min(self.len() - 2);
        let i1 = ((math::ceil((hi - first) / h)) as usize).min(self.len() - 1);
        let mut sum = 0.0;
        for i in i0..i1 {
            let a = self.tau[i].max(lo);
            let b = self.tau[i + 1].min(hi);
            if b > a {
                sum += 0.5 * (self.value_at(a) + self.value_at(b)) * (b - a);
            }
        }
        sum
    }

    /// Integrals over contiguous bins of width `bin_width` centred on
    /// `i * bin_width` for `i = -half_bins..=half_bins`.
    pub fn integrate_bins(&self, bin_width: f64, half_bins: usize) -> Vec<f64> {
        let n = half_bins as i64;
        (-n..=n)
            .map(|i| {
                let c = i as f64 * bin_width;
                self.integrate(c - 0.5 * bin_width, c + 0.5 * bin_width)
            })
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> CorrelationCurve {
        CorrelationCurve {
            tau: self.tau.clone(),
            density: self.density.iter().map(|v| v * factor).collect(),
            label: self.label,
        }
    }
}
