use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::simplex::{self, SimplexOptions};
use super::{finalize, linear_lsq, make_params, FitModel, FitResult, FitSpec, SampledCurve, CONVERGENCE_TOL, MAX_ITERATIONS};
use crate::math;
use crate::{Error, Result};

/// Spectrometer response shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentShape {
    /// Widths add.
    #[default]
    Lorentzian,
    /// Voigt profile, evaluated by numerical convolution.
    Gaussian,
}

const PARAMS: [(&str, &str); 4] = [("center_ghz", "GHz"), ("fwhm_ghz", "GHz"), ("area", "counts*GHz"), ("offset", "counts")];

/// Unit-area Lorentzian.
#[inline]
fn lorentz(x: f64, fwhm: f64) -> f64 {
    let hw = 0.5 * fwhm;
    hw / (math::PI * (x * x + hw * hw))
}

/// Points of the Simpson rule for the Voigt convolution (odd).
const VOIGT_NODES: usize = 241;
const VOIGT_REACH_SIGMAS: f64 = 6.0;

fn voigt(x: f64, fwhm_l: f64, fwhm_g: f64) -> f64 {
    if fwhm_g <= 0.0 {
        return lorentz(x, fwhm_l);
    }
    let sigma = fwhm_g / math::GAUSS_FWHM_PER_SIGMA;
    let a = -VOIGT_REACH_SIGMAS * sigma;
    let h = 2.0 * VOIGT_REACH_SIGMAS * sigma / (VOIGT_NODES - 1) as f64;
    let norm = 1.0 / (math::sqrt(2.0 * math::PI) * sigma);
    let mut sum = 0.0;
    for i in 0..VOIGT_NODES {
        let s = a + i as f64 * h;
        let wgt = if i == 0 || i == VOIGT_NODES - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += wgt * norm * math::exp(-0.5 * (s / sigma) * (s / sigma)) * lorentz(x - s, fwhm_l);
    }
    sum * h / 3.0
}

fn line_shape(instrument: InstrumentShape, inst_fwhm: f64, x: f64, fwhm: f64) -> f64 {
    match instrument {
        InstrumentShape::Lorentzian => lorentz(x, fwhm + inst_fwhm),
        InstrumentShape::Gaussian => voigt(x, fwhm, inst_fwhm),
    }
}

/// `[center, intrinsic fwhm, area, offset]` observed through the instrument.
pub fn lorentzian_model(instrument: InstrumentShape, inst_fwhm: f64, p: &[f64], x: f64) -> f64 {
    p[2] * line_shape(instrument, inst_fwhm, x - p[0], p[1]) + p[3]
}

/// Fits a Lorentzian line seen through a Lorentzian instrument of width
/// `instrument_fwhm` and returns the intrinsic (deconvolved) FWHM.
pub fn fit_lorentzian(s: &SampledCurve, instrument_fwhm: f64) -> Result<FitResult> {
    fit_lorentzian_with(s, instrument_fwhm, InstrumentShape::Lorentzian)
}

pub fn fit_lorentzian_with(s: &SampledCurve, instrument_fwhm: f64, instrument: InstrumentShape) -> Result<FitResult> {
    s.validate()?;
    if s.len() < 5 {
        return Err(Error::Degenerate("need at least 5 points"));
    }
    if !(instrument_fwhm >= 0.0 && instrument_fwhm.is_finite()) {
        return Err(Error::invalid("instrument_fwhm_ghz", "must be non-negative"));
    }
    let (ymin, ymax) = s.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(ymax > ymin) {
        return Err(Error::Degenerate("zero variance in y"));
    }
    let imax = s.y.iter().position(|&v| v == ymax).unwrap_or(0);
    let half = 0.5 * (ymax + ymin);
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = imax;
        for i in range {
            if s.y[i] < half {
                let (x0, y0, x1, y1) = (s.x[prev], s.y[prev], s.x[i], s.y[i]);
                return Some(x0 + (half - y0) * (x1 - x0) / (y1 - y0));
            }
            prev = i;
        }
        None
    };
    let left = cross(&mut (0..imax).rev());
    let right = cross(&mut (imax + 1..s.len()));
    let span = s.x[s.len() - 1] - s.x[0];
    let observed = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (s.x[imax] - l),
        (None, Some(r)) => 2.0 * (r - s.x[imax]),
        (None, None) => 0.5 * span,
    };
    let center0 = s.x[imax];
    let w0 = (observed - instrument_fwhm).max(0.1 * observed).max(1e-9 * span);

    let w = s.weights();
    let objective = |theta: &[f64]| -> f64 {
        let (c, fw) = (theta[0], theta[1]);
        if !(fw > 0.0) {
            return f64::INFINITY;
        }
        let col: Vec<f64> = s.x.iter().map(|&x| line_shape(instrument, instrument_fwhm, x - c, fw)).collect();
        let ones = alloc::vec![1.0; s.len()];
        linear_lsq(&[col, ones], &s.y, &w).map_or(f64::INFINITY, |(_, chi2)| chi2)
    };

    // coarse scan over width
    let mut best = (f64::INFINITY, w0);
    for i in 0..25 {
        let fw = w0 * math::exp(math::ln(10.0) * (i as f64 / 24.0 * 2.0 - 1.0));
        let v = objective(&[center0, fw]);
        if v < best.0 {
            best = (v, fw);
        }
    }
    let dx = s.x[1] - s.x[0];
    let opts = SimplexOptions { max_iter: MAX_ITERATIONS, ftol: CONVERGENCE_TOL, xtol: CONVERGENCE_TOL, restarts: 3 };
    let r = simplex::minimize(objective, &[center0, best.1], &[0.25 * best.1.max(dx), 0.2 * best.1], opts);
    if !r.converged {
        return Err(Error::NoConvergence { iterations: r.iterations });
    }
    let (c, fw) = (r.x[0], r.x[1]);
    let col: Vec<f64> = s.x.iter().map(|&x| line_shape(instrument, instrument_fwhm, x - c, fw)).collect();
    let ones = alloc::vec![1.0; s.len()];
    let (beta, _) = linear_lsq(&[col, ones], &s.y, &w).ok_or(Error::Degenerate("singular linear system"))?;
    let values = [c, fw, beta[0], beta[1]];
    let fr = FitResult {
        model: FitModel::Lorentzian,
        params: make_params(&PARAMS, &values),
        goodness: 0.0,
        dof: s.len().saturating_sub(4),
        iterations: r.iterations,
        spec: FitSpec::Lorentzian { instrument_fwhm_ghz: instrument_fwhm, instrument },
    };
    Ok(finalize(fr, s))
}
