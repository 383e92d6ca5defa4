//! Linewidth and lifetime extraction.
//!
//! Both fits are separable: the nonlinear shape parameters (centre and
//! width, or lifetimes and time zero) are found by a coarse grid scan
//! followed by Nelder-Mead refinement, while the amplitudes and constant
//! offset are solved by weighted linear least squares at every step.

mod decay;
mod lorentzian;
pub mod simplex;

pub use decay::{decay_model, fit_decay, DecayModel};
pub use lorentzian::{fit_lorentzian, fit_lorentzian_with, lorentzian_model, InstrumentShape};

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::math;
use crate::params::DetectorParams;
use crate::{Error, Result};

/// Iteration cap shared by all fits.
pub const MAX_ITERATIONS: usize = 10_000;
/// Relative objective change counted as converged.
pub const CONVERGENCE_TOL: f64 = 1e-10;

/// Measured curve: GHz for spectra, ps for decays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_err: Option<Vec<f64>>,
}

impl SampledCurve {
    pub fn new(x: Vec<f64>, y: Vec<f64>, y_err: Option<Vec<f64>>) -> Result<Self> {
        let s = SampledCurve { x, y, y_err };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() {
            return Err(Error::invalid("y", "length differs from x"));
        }
        if let Some(e) = &self.y_err {
            if e.len() != self.x.len() {
                return Err(Error::invalid("y_err", "length differs from x"));
            }
            if e.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::invalid("y_err", "must be positive"));
            }
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("x", "must be strictly increasing"));
        }
        if self.y.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::invalid("y", "must be non-negative"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Shifts the abscissa by `dx`.
    pub fn shifted(&self, dx: f64) -> SampledCurve {
        SampledCurve { x: self.x.iter().map(|v| v + dx).collect(), ..self.clone() }
    }

    /// Least-squares weights: 1/σ² with explicit errors, Poisson 1/max(N, 1)
    /// when every y is a whole number, otherwise uniform.
    pub fn weights(&self) -> Vec<f64> {
        if let Some(e) = &self.y_err {
            return e.iter().map(|s| 1.0 / (s * s)).collect();
        }
        if self.is_counts() {
            self.y.iter().map(|&n| 1.0 / n.max(1.0)).collect()
        } else {
            alloc::vec![1.0; self.len()]
        }
    }

    pub fn is_counts(&self) -> bool {
        self.y.iter().all(|&v| v == math::round(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Lorentzian,
    SingleExp,
    Biexp,
}

/// What was fitted, sufficient to re-evaluate the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitSpec {
    Lorentzian { instrument_fwhm_ghz: f64, instrument: InstrumentShape },
    Decay { model: DecayModel, detector: DetectorParams },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub unit: String,
    pub value: f64,
    /// 1σ; infinite when the curvature is singular.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<FitParam>,
    /// Reduced chi-square.
    pub goodness: f64,
    pub dof: usize,
    pub iterations: usize,
    pub spec: FitSpec,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.param(name).map_or(f64::NAN, |p| p.value)
    }

    pub fn sigma(&self, name: &str) -> f64 {
        self.param(name).map_or(f64::NAN, |p| p.sigma)
    }

    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    /// Model prediction at `x` for parameter vector `p`.
    pub fn eval_with(&self, p: &[f64], x: f64) -> f64 {
        eval_spec(&self.spec, p, x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with(&self.values(), x)
    }
}

pub(crate) fn eval_spec(spec: &FitSpec, p: &[f64], x: f64) -> f64 {
    match spec {
        FitSpec::Lorentzian { instrument_fwhm_ghz, instrument } => {
            lorentzian_model(*instrument, *instrument_fwhm_ghz, p, x)
        }
        FitSpec::Decay { model, detector } => decay_model(*model, detector, p, x),
    }
}

pub(crate) fn make_params(spec: &[(&str, &str)], values: &[f64]) -> Vec<FitParam> {
    spec.iter()
        .zip(values)
        .map(|(&(name, unit), &value)| FitParam { name: name.to_string(), unit: unit.to_string(), value, sigma: 0.0 })
        .collect()
}

/// Weighted linear least squares for `y ≈ Σ β_k col_k`. Returns the
/// coefficients and the chi-square, or `None` if the normal equations are
/// singular.
pub(crate) fn linear_lsq(cols: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = cols.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for i in 0..y.len() {
        for r in 0..m {
            let wr = w[i] * cols[r][i];
            b[r] += wr * y[i];
            for c in r..m {
                a[(r, c)] += wr * cols[c][i];
            }
        }
    }
    for r in 0..m {
        for c in 0..r {
            a[(r, c)] = a[(c, r)];
        }
    }
    let beta = a.cholesky()?.solve(&b);
    let mut chi2 = 0.0;
    for i in 0..y.len() {
        let mut f = 0.0;
        for k in 0..m {
            f += beta[k] * cols[k][i];
        }
        let r = y[i] - f;
        chi2 += w[i] * r * r;
    }
    Some((beta.iter().copied().collect(), chi2))
}

pub(crate) fn chi_square(spec: &FitSpec, p: &[f64], s: &SampledCurve, w: &[f64]) -> f64 {
    s.x.iter()
        .zip(&s.y)
        .zip(w)
        .map(|((&x, &y), &wi)| {
            let r = y - eval_spec(spec, p, x);
            wi * r * r
        })
        .sum()
}

/// Local-curvature standard errors: covariance (JᵀWJ)⁻¹ scaled by the
/// reduced chi-square, with J from central differences. A singular
/// curvature gives infinite uncertainties.
pub fn uncertainty(fr: &FitResult, s: &SampledCurve) -> Vec<f64> {
    let p = fr.values();
    let n_par = p.len();
    let w = s.weights();
    let n = s.len();
    let mut jac = DMatrix::<f64>::zeros(n, n_par);
    for k in 0..n_par {
        let h = 1e-6 * math::abs(p[k]).max(1e-3);
        let mut up = p.clone();
        let mut dn = p.clone();
        up[k] += h;
        dn[k] -= h;
        for (i, &x) in s.x.iter().enumerate() {
            jac[(i, k)] = (fr.eval_with(&up, x) - fr.eval_with(&dn, x)) / (2.0 * h);
        }
    }
    let mut jtwj = DMatrix::<f64>::zeros(n_par, n_par);
    for i in 0..n {
        for r in 0..n_par {
            let wr = w[i] * jac[(i, r)];
            for c in 0..n_par {
                jtwj[(r, c)] += wr * jac[(i, c)];
            }
        }
    }
    // Equilibrate before inverting; parameter scales differ by many decades.
    let d: Vec<f64> = (0..n_par).map(|k| math::sqrt(jtwj[(k, k)])).collect();
    if d.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return alloc::vec![f64::INFINITY; n_par];
    }
    let scaled = DMatrix::from_fn(n_par, n_par, |r, c| jtwj[(r, c)] / (d[r] * d[c]));
    let Some(inv) = scaled.try_inverse() else {
        return alloc::vec![f64::INFINITY; n_par];
    };
    let red = if fr.dof > 0 { chi_square(&fr.spec, &p, s, &w) / fr.dof as f64 } else { 0.0 };
    (0..n_par)
        .map(|k| {
            let v = inv[(k, k)] / (d[k] * d[k]) * red;
            if v >= 0.0 && v.is_finite() {
                math::sqrt(v)
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

pub(crate) fn finalize(mut fr: FitResult, s: &SampledCurve) -> FitResult {
    let w = s.weights();
    let chi2 = chi_square(&fr.spec, &fr.values(), s, &w);
    fr.goodness = if fr.dof > 0 { chi2 / fr.dof as f64 } else { 0.0 };
    let sig = uncertainty(&fr, s);
    for (p, s) in fr.params.iter_mut().zip(sig) {
        p.sigma = s;
    }
    fr
}

/// Re-runs the fit described by `spec` on new data.
pub fn refit(spec: &FitSpec, s: &SampledCurve) -> Result<FitResult> {
    match spec {
        FitSpec::Lorentzian { instrument_fwhm_ghz, instrument } => {
            fit_lorentzian_with(s, *instrument_fwhm_ghz, *instrument)
        }
        FitSpec::Decay { model, detector } => fit_decay(s, *model, detector),
    }
}

/// Bootstrap standard deviations of the fitted parameters. Count data are
/// resampled as Poisson draws around the observed counts; other data by
/// resampling residuals around the fitted model.
pub fn bootstrap_uncertainty(fr: &FitResult, s: &SampledCurve, n_resamples: usize, seed: u64) -> Result<Vec<f64>> {
    if n_resamples < 2 {
        return Err(Error::invalid("n_resamples", "need at least two resamples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fitted: Vec<f64> = s.x.iter().map(|&x| fr.eval(x)).collect();
    let resid: Vec<f64> = s.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let counts = s.is_counts() && s.y_err.is_none();
    let n_par = fr.params.len();
    let mut sum = alloc::vec![0.0; n_par];
    let mut sum2 = alloc::vec![0.0; n_par];
    for _ in 0..n_resamples {
        let y: Vec<f64> = if counts {
            s.y.iter()
                .map(|&n| if n > 0.0 { Poisson::new(n).map(|p| p.sample(&mut rng)).unwrap_or(0.0) } else { 0.0 })
                .collect()
        } else {
            use rand::Rng;
            fitted.iter().map(|f| (f + resid[rng.random_range(0..resid.len())]).max(0.0)).collect()
        };
        let resampled = SampledCurve { x: s.x.clone(), y, y_err: s.y_err.clone() };
        let r = refit(&fr.spec, &resampled)?;
        for (k, v) in r.values().iter().enumerate() {
            sum[k] += v;
            sum2[k] += v * v;
        }
    }
    let n = n_resamples as f64;
    Ok((0..n_par)
        .map(|k| {
            let mean = sum[k] / n;
            math::sqrt(((sum2[k] - n * mean * mean) / (n - 1.0)).max(0.0))
        })
        .collect())
}
