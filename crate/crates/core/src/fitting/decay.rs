use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::simplex::{self, SimplexOptions};
use super::{finalize, linear_lsq, make_params, FitModel, FitResult, FitSpec, SampledCurve, CONVERGENCE_TOL, MAX_ITERATIONS};
use crate::math;
use crate::params::{DetectorParams, IrfShape};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    SingleExp,
    Biexp,
}

const SINGLE_PARAMS: [(&str, &str); 4] = [("lifetime_ps", "ps"), ("t0_ps", "ps"), ("amplitude", "counts*ps"), ("offset", "counts")];
const BIEXP_PARAMS: [(&str, &str); 6] = [
    ("lifetime_ps", "ps"),
    ("slow_lifetime_ps", "ps"),
    ("t0_ps", "ps"),
    ("amplitude", "counts*ps"),
    ("slow_fraction", ""),
    ("offset", "counts"),
];

/// Slow lifetime must exceed the fast one by this factor during the search.
const MIN_LIFETIME_RATIO: f64 = 1.05;
/// Fitted ratios below this with a non-negligible slow fraction are
/// reported as degenerate.
const DEGENERATE_RATIO: f64 = 1.1;

/// Unit-area exponential decay starting at 0, seen through one detector's
/// timing response.
pub fn convolved_exponential(d: &DetectorParams, lifetime: f64, t: f64) -> f64 {
    let rate = 1.0 / lifetime;
    match d.irf_shape {
        IrfShape::Delta => {
            if t >= 0.0 {
                rate * math::exp(-rate * t)
            } else {
                0.0
            }
        }
        IrfShape::Gaussian => {
            let sigma = d.single_scale();
            let a = rate * sigma * sigma;
            let log_pre = rate * (0.5 * a - t);
            let z = (a - t) / (math::SQRT_2 * sigma);
            if z > 25.0 {
                // erfc underflows; use the asymptotic erfc(z) ≈ e^{-z²}/(z√π)
                let lg = log_pre - z * z - math::ln(z * math::sqrt(math::PI));
                return 0.5 * rate * math::exp(lg);
            }
            0.5 * rate * math::exp(log_pre) * math::erfc(z)
        }
        IrfShape::TwoSidedExponential => {
            let a = 1.0 / d.single_scale();
            let pre = 0.5 * rate * a;
            if t <= 0.0 {
                pre * math::exp(a * t) / (rate + a)
            } else {
                let diff = a - rate;
                let rising = if math::abs(diff * t) < 1e-8 {
                    t * math::exp(-rate * t)
                } else {
                    math::exp(-rate * t) * (-math::expm1(-diff * t)) / diff
                };
                pre * (rising + math::exp(-rate * t) / (rate + a))
            }
        }
    }
}

/// Single: `[τ, t0, A, offset]`; biexponential:
/// `[τ_fast, τ_slow, t0, A, slow_fraction, offset]`.
pub fn decay_model(model: DecayModel, d: &DetectorParams, p: &[f64], x: f64) -> f64 {
    match model {
        DecayModel::SingleExp => p[2] * convolved_exponential(d, p[0], x - p[1]) + p[3],
        DecayModel::Biexp => {
            let t = x - p[2];
            p[3] * ((1.0 - p[4]) * convolved_exponential(d, p[0], t) + p[4] * convolved_exponential(d, p[1], t)) + p[5]
        }
    }
}

/// Lifetime guess from a log-linear regression on the tail between 50% and
/// 2% of the peak (or the last points above one count).
fn tail_lifetime(s: &SampledCurve, from: usize) -> Option<f64> {
    let peak = s.y[from];
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in from..s.len() {
        let y = s.y[i];
        if y < 0.02 * peak || y < 1.0 {
            break;
        }
        if y > 0.5 * peak {
            continue;
        }
        let (x, ly) = (s.x[i], math::ln(y));
        sx += x;
        sy += ly;
        sxx += x * x;
        sxy += x * ly;
        n += 1.0;
    }
    if n < 3.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope < 0.0).then(|| -1.0 / slope)
}

fn log_grid(center: f64, factor: f64, n: usize) -> impl Iterator<Item = f64> {
    let lf = math::ln(factor);
    (0..n).map(move |i| center * math::exp(lf * (2.0 * i as f64 / (n - 1) as f64 - 1.0)))
}

/// Fits an IRF-convolved single or biexponential decay with a free time
/// zero and constant offset.
pub fn fit_decay(s: &SampledCurve, model: DecayModel, d: &DetectorParams) -> Result<FitResult> {
    s.validate()?;
    d.validate()?;
    if s.len() < 10 {
        return Err(Error::Degenerate("need at least 10 points"));
    }
    let ymax = s.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ymin = s.y.iter().copied().fold(f64::INFINITY, f64::min);
    if !(ymax > ymin) {
        return Err(Error::Degenerate("zero variance in y"));
    }
    let ipeak = s.y.iter().position(|&v| v == ymax).unwrap_or(0);
    let span = s.x[s.len() - 1] - s.x[0];
    let dx = span / (s.len() - 1) as f64;
    let tau0 = tail_lifetime(s, ipeak).unwrap_or(0.1 * span).clamp(dx, span);
    let irf = d.irf_fwhm;
    let w = s.weights();
    let ones = alloc::vec![1.0; s.len()];

    let solve = |taus: &[f64], t0: f64| -> Option<(Vec<f64>, f64)> {
        let mut cols: Vec<Vec<f64>> = taus
            .iter()
            .map(|&tau| s.x.iter().map(|&x| convolved_exponential(d, tau, x - t0)).collect())
            .collect();
        cols.push(ones.clone());
        linear_lsq(&cols, &s.y, &w)
    };

    let t0_candidates: Vec<f64> = {
        let lo = s.x[ipeak] - 2.0 * irf - 2.0 * dx;
        let hi = s.x[ipeak] + dx;
        (0..16).map(|i| lo + (hi - lo) * i as f64 / 15.0).collect()
    };
    let opts = SimplexOptions { max_iter: MAX_ITERATIONS, ftol: CONVERGENCE_TOL, xtol: CONVERGENCE_TOL, restarts: 3 };

    let single_objective = |th: &[f64]| -> f64 {
        if !(th[0] > 0.0) {
            return f64::INFINITY;
        }
        solve(&th[..1], th[1]).map_or(f64::INFINITY, |(_, c)| c)
    };
    let mut best = (f64::INFINITY, tau0, t0_candidates[0]);
    for tau in log_grid(tau0, 3.0, 13) {
        for &t0 in &t0_candidates {
            let v = single_objective(&[tau, t0]);
            if v < best.0 {
                best = (v, tau, t0);
            }
        }
    }
    let step_t0 = (0.25 * irf).max(dx);
    let single = simplex::minimize(single_objective, &[best.1, best.2], &[0.1 * best.1, step_t0], opts);
    if !single.converged {
        return Err(Error::NoConvergence { iterations: single.iterations });
    }

    let (values, iterations, dof): (Vec<f64>, usize, usize) = match model {
        DecayModel::SingleExp => {
            let (beta, _) = solve(&single.x[..1], single.x[1]).ok_or(Error::Degenerate("singular linear system"))?;
            (alloc::vec![single.x[0], single.x[1], beta[0], beta[1]], single.iterations, s.len().saturating_sub(4))
        }
        DecayModel::Biexp => {
            let objective = |th: &[f64]| -> f64 {
                if !(th[0] > 0.0 && th[1] > MIN_LIFETIME_RATIO * th[0]) {
                    return f64::INFINITY;
                }
                solve(&th[..2], th[2]).map_or(f64::INFINITY, |(_, c)| c)
            };
            let (tau1, t01) = (single.x[0], single.x[1]);
            let mut best = (single.f, tau1, 2.0 * tau1, t01);
            for tf in log_grid(0.5 * tau1, 2.0, 9) {
                for ts in log_grid(5.0 * tau1, 5.0, 13) {
                    let v = objective(&[tf, ts, t01]);
                    if v < best.0 {
                        best = (v, tf, ts, t01);
                    }
                }
            }
            let x0 = [best.1, best.2, best.3];
            let r = simplex::minimize(objective, &x0, &[0.1 * best.1, 0.1 * best.2, step_t0], opts);
            if !r.converged {
                return Err(Error::NoConvergence { iterations: r.iterations });
            }
            let (beta, _) = solve(&r.x[..2], r.x[2]).ok_or(Error::Degenerate("singular linear system"))?;
            let total = beta[0] + beta[1];
            let frac = if total != 0.0 { beta[1] / total } else { 0.0 };
            if r.x[1] < DEGENERATE_RATIO * r.x[0] && frac.abs() > 1e-3 {
                return Err(Error::Degenerate("slow and fast lifetimes collapsed"));
            }
            let iterations = single.iterations + r.iterations;
            (alloc::vec![r.x[0], r.x[1], r.x[2], total, frac, beta[2]], iterations, s.len().saturating_sub(6))
        }
    };

    let (fit_model, names): (FitModel, &[(&str, &str)]) = match model {
        DecayModel::SingleExp => (FitModel::SingleExp, &SINGLE_PARAMS),
        DecayModel::Biexp => (FitModel::Biexp, &BIEXP_PARAMS),
    };
    let fr = FitResult {
        model: fit_model,
        params: make_params(names, &values),
        goodness: 0.0,
        dof,
        iterations,
        spec: FitSpec::Decay { model, detector: *d },
    };
    Ok(finalize(fr, s))
}
