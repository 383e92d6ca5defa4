//! Time-tag correlation histograms and the interference metrics built on
//! them.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::areas::{coalescence_probability, coincidence_ratio, Estimate, PeakAreas};
use crate::montecarlo::TimeTagStream;
use crate::{Error, Result};

/// Default histogram bin width, ps.
pub const DEFAULT_BIN_WIDTH: u64 = 256;

/// Coincidence counts on contiguous bins of width `bin_width` centred on
/// `i * bin_width`, `i = -half_bins..=half_bins`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    pub bin_width: u64,
    pub half_bins: usize,
    pub counts: Vec<u64>,
    /// Tags in the start and stop streams.
    pub n_tags: [u64; 2],
    /// Half range covered by the bins, `(half_bins + ½) * bin_width`.
    pub span: f64,
}

impl CorrelationHistogram {
    pub fn empty(bin_width: u64, max_tau: f64) -> Result<Self> {
        if bin_width == 0 {
            return Err(Error::invalid("bin_width_ps", "must be positive"));
        }
        let w = bin_width as f64;
        let m = max_tau / w - 0.5;
        if !(m >= 0.0) {
            return Err(Error::invalid("max_tau", "must be at least half a bin"));
        }
        let half_bins = m as usize;
        Ok(CorrelationHistogram {
            bin_width,
            half_bins,
            counts: alloc::vec![0; 2 * half_bins + 1],
            n_tags: [0, 0],
            span: (half_bins as f64 + 0.5) * w,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        (i as i64 - self.half_bins as i64) as f64 * self.bin_width as f64
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.bin_center(i)).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin index for a delay, or `None` outside the covered range.
    #[inline]
    pub fn bin_of(&self, tau: i64) -> Option<usize> {
        let w = self.bin_width as i64;
        let idx = (2 * tau + w).div_euclid(2 * w) + self.half_bins as i64;
        (0..self.counts.len() as i64).contains(&idx).then_some(idx as usize)
    }

    pub fn same_binning(&self, other: &CorrelationHistogram) -> bool {
        self.bin_width == other.bin_width && self.half_bins == other.half_bins
    }

    /// Elementwise sum of histograms from disjoint data.
    pub fn merge(&self, other: &CorrelationHistogram) -> Result<CorrelationHistogram> {
        if !self.same_binning(other) {
            return Err(Error::BinningMismatch);
        }
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        Ok(CorrelationHistogram {
            counts,
            n_tags: [self.n_tags[0] + other.n_tags[0], self.n_tags[1] + other.n_tags[1]],
            ..self.clone()
        })
    }

    /// Sum of counts in bins whose centres satisfy `lo <= c < hi`.
    pub fn sum_between(&self, lo: f64, hi: f64) -> u64 {
        (0..self.len())
            .filter(|&i| {
                let c = self.bin_center(i);
                c >= lo && c < hi
            })
            .map(|i| self.counts[i])
            .sum()
    }
}

fn check_sorted(tags: &[u64]) -> Result<()> {
    match tags.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(Error::Unsorted { index: i + 1 }),
        None => Ok(()),
    }
}

/// Histogram of `stop - start` over all pairs inside the covered range,
/// using a sliding window over the stop stream.
pub fn correlate_tags(start: &[u64], stop: &[u64], bin_width: u64, max_tau: f64) -> Result<CorrelationHistogram> {
    check_sorted(start)?;
    check_sorted(stop)?;
    let mut h = CorrelationHistogram::empty(bin_width, max_tau)?;
    h.n_tags = [start.len() as u64, stop.len() as u64];
    let w = bin_width as i64;
    // pairs land in bins iff -reach <= 2τ < reach
    let reach = (2 * h.half_bins as i64 + 1) * w;
    let mut lo = 0usize;
    for &t in start {
        let t = t as i64;
        while lo < stop.len() && 2 * (stop[lo] as i64 - t) < -reach {
            lo += 1;
        }
        let mut j = lo;
        while j < stop.len() {
            let tau = stop[j] as i64 - t;
            if 2 * tau >= reach {
                break;
            }
            let idx = (2 * tau + w).div_euclid(2 * w) + h.half_bins as i64;
            h.counts[idx as usize] += 1;
            j += 1;
        }
    }
    Ok(h)
}

/// Correlates the second stream against the first (τ = t₂ − t₁).
pub fn correlate(s1: &TimeTagStream, s2: &TimeTagStream, bin_width: u64, max_tau: f64) -> Result<CorrelationHistogram> {
    correlate_tags(&s1.tags, &s2.tags, bin_width, max_tau)
}

/// Peak areas of a histogram. Each peak collects the bins whose centres lie
/// in `[kT - window/2, kT + window/2)`. Every complete side peak inside the
/// span is used for B; at least two per side are required.
pub fn integrate_peaks(h: &CorrelationHistogram, rep_period: f64, window: f64) -> Result<PeakAreas> {
    if !(window > 0.0) || window > rep_period * (1.0 + 1e-12) {
        return Err(Error::InvalidWindow { window, reason: "must lie in (0, rep_period]" });
    }
    let half = 0.5 * window;
    let n_side = ((h.span - half) / rep_period + 1e-9).max(0.0) as usize;
    if n_side < 2 {
        return Err(Error::NotEnoughSidePeaks { needed: 2 });
    }
    let area = |c: f64| h.sum_between(c - half, c + half) as f64;
    let center = area(0.0);
    let mut side = Vec::with_capacity(2 * n_side);
    for k in 1..=n_side {
        side.push(area(-(k as f64) * rep_period));
        side.push(area(k as f64 * rep_period));
    }
    Ok(PeakAreas::from_counts(center, side))
}

/// Single-source autocorrelation: centre area over mean side area.
pub fn hbt_purity(h: &CorrelationHistogram, rep_period: f64, window: f64) -> Result<Estimate> {
    coincidence_ratio(&integrate_peaks(h, rep_period, window)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceMetrics {
    /// Coalescence probability from peak areas; `None` when undefined.
    pub pc: Option<Estimate>,
    /// Post-selected coalescence from counts within ±window/2.
    pub pc_post: Option<Estimate>,
    /// A∥ / B.
    pub ratio_par_b: Option<Estimate>,
    /// A⊥ / B.
    pub ratio_perp_b: Option<Estimate>,
    /// Post-selection window, ps.
    pub window: f64,
}

/// Assembles Pc, P′c and A∥/B. Undefined quantities (zero denominators) are
/// reported as `None`.
pub fn metrics(
    areas_perp: &PeakAreas,
    areas_par: &PeakAreas,
    h_perp: &CorrelationHistogram,
    h_par: &CorrelationHistogram,
    post_window: f64,
) -> Result<InterferenceMetrics> {
    if !h_perp.same_binning(h_par) || areas_perp.side.len() != areas_par.side.len() {
        return Err(Error::BinningMismatch);
    }
    if !(post_window >= h_perp.bin_width as f64) {
        return Err(Error::InvalidWindow { window: post_window, reason: "narrower than one bin" });
    }
    let half = 0.5 * post_window;
    let g_perp = h_perp.sum_between(-half, half + 1e-9) as f64;
    let g_par = h_par.sum_between(-half, half + 1e-9) as f64;
    let pc_post = (g_perp > 0.0).then(|| {
        let a = PeakAreas::from_counts(g_perp, Vec::new());
        let b = PeakAreas::from_counts(g_par, Vec::new());
        coalescence_probability(&a, &b).expect("positive denominator")
    });
    Ok(InterferenceMetrics {
        pc: coalescence_probability(areas_perp, areas_par).ok(),
        pc_post,
        ratio_par_b: coincidence_ratio(areas_par).ok(),
        ratio_perp_b: coincidence_ratio(areas_perp).ok(),
        window: post_window,
    })
}
