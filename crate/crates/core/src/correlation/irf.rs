use alloc::vec::Vec;

use super::CorrelationCurve;
use crate::math;
use crate::params::{DetectorParams, IrfShape};
use crate::{Error, Result};

/// Kernel tails beyond this many scale lengths are dropped before
/// renormalisation.
const GAUSS_CUTOFF_SIGMAS: f64 = 10.0;
const LAPLACE_CUTOFF_SCALES: f64 = 40.0;

/// CDF of the two-detector time-difference response (single response
/// convolved with its mirror image).
pub fn pair_response_cdf(d: &DetectorParams, s: f64) -> f64 {
    let scale = d.single_scale();
    match d.irf_shape {
        IrfShape::Delta => {
            if s >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        IrfShape::Gaussian => math::norm_cdf(s / (math::SQRT_2 * scale)),
        IrfShape::TwoSidedExponential => {
            // density (1/4b)(1 + |x|) e^{-|x|}, x = s/b
            let x = math::abs(s) / scale;
            let tail = 0.25 * (2.0 + x) * math::exp(-x);
            if s >= 0.0 {
                1.0 - tail
            } else {
                tail
            }
        }
    }
}

/// Cell-integrated pair-response kernel on spacing `h`, indices `-m..=m`.
fn pair_kernel(d: &DetectorParams, h: f64) -> Vec<f64> {
    let scale = d.single_scale();
    let reach = match d.irf_shape {
        IrfShape::Gaussian => GAUSS_CUTOFF_SIGMAS * math::SQRT_2 * scale,
        IrfShape::TwoSidedExponential => LAPLACE_CUTOFF_SCALES * scale,
        IrfShape::Delta => 0.0,
    };
    let m = math::ceil(reach / h) as i64;
    let mut k: Vec<f64> = (-m..=m)
        .map(|j| {
            let c = j as f64 * h;
            pair_response_cdf(d, c + 0.5 * h) - pair_response_cdf(d, c - 0.5 * h)
        })
        .collect();
    let total: f64 = k.iter().sum();
    for v in &mut k {
        *v /= total;
    }
    k
}

/// Convolves a correlation curve with the two-detector timing response.
///
/// The curve is extended with its edge values so a constant background is
/// preserved up to the grid boundary. The kernel has unit mass, so areas are
/// preserved except for what leaks across the grid edges.
pub fn convolve_with_irf(curve: &CorrelationCurve, d: &DetectorParams) -> Result<CorrelationCurve> {
    d.validate()?;
    if d.is_delta() {
        return Ok(curve.clone());
    }
    let h = curve.spacing();
    let max = d.irf_fwhm / 8.0;
    if h > max * (1.0 + 1e-9) {
        return Err(Error::GridTooCoarse { spacing: h, max, what: "irf_fwhm / 8" });
    }
    let kernel = pair_kernel(d, h);
    let m = (kernel.len() / 2) as i64;
    let n = curve.len() as i64;
    let y = &curve.density;
    let density = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (jj, &k) in kernel.iter().enumerate() {
                let src = (i - (jj as i64 - m)).clamp(0, n - 1);
                acc += k * y[src as usize];
            }
            acc.max(0.0)
        })
        .collect();
    Ok(CorrelationCurve { tau: curve.tau.clone(), density, label: curve.label })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Polarization;

    fn spike() -> CorrelationCurve {
        let tau: Vec<f64> = (-1000..=1000).map(|i| i as f64 * 10.0).collect();
        let mut density = alloc::vec![0.0; tau.len()];
        density[1000] = 1.0;
        CorrelationCurve::new(tau, density, Polarization::Parallel).unwrap()
    }

    #[test]
    fn delta_is_identity() {
        let c = spike();
        assert_eq!(convolve_with_irf(&c, &DetectorParams::ideal()).unwrap(), c);
    }

    #[test]
    fn mass_preserved_and_width_matches() {
        for shape in [IrfShape::Gaussian, IrfShape::TwoSidedExponential] {
            let d = DetectorParams::from_combined_fwhm(shape, 640.0);
            let c = spike();
            let out = convolve_with_irf(&c, &d).unwrap();
            let a0: f64 = c.density.iter().sum();
            let a1: f64 = out.density.iter().sum();
            assert!((a0 - a1).abs() < 1e-12);
            // half maximum crossing of the smeared spike
            let peak = out.density[1000];
            let mut i = 1000;
            while out.density[i] > 0.5 * peak {
                i += 1;
            }
            let fwhm = 2.0 * (i as f64 - 1000.0) * 10.0;
            assert!((fwhm - 640.0).abs() <= 20.0, "{shape:?} {fwhm}");
        }
    }

    #[test]
    fn rejects_undersampled_kernel() {
        let d = DetectorParams::gaussian(40.0);
        assert!(matches!(convolve_with_irf(&spike(), &d), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn cdf_is_a_distribution() {
        for shape in [IrfShape::Gaussian, IrfShape::TwoSidedExponential] {
            let d = DetectorParams::from_combined_fwhm(shape, 640.0);
            assert!((pair_response_cdf(&d, 0.0) - 0.5).abs() < 1e-15);
            assert!(pair_response_cdf(&d, 1e5) > 1.0 - 1e-12);
            assert!(pair_response_cdf(&d, -1e5) < 1e-12);
        }
    }
}
