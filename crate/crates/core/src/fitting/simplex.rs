use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Converged when the objective spread across the simplex falls below
    /// `ftol * (|f_best| + ftol * |f(x0)|)`.
    pub ftol: f64,
    /// And the simplex extent below `xtol * (|x| + scale)` per coordinate.
    pub xtol: f64,
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_iter: 10_000, ftol: 1e-10, xtol: 1e-10, restarts: 3 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead minimisation from `x0` with initial edge lengths `step`.
/// After convergence the simplex is rebuilt around the best point and the
/// search restarted, up to `restarts` times, until a restart no longer
/// improves the objective.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: &[f64], opts: SimplexOptions) -> SimplexResult {
    let f0 = sanitize(f(x0));
    let f_floor = if f0.is_finite() { opts.ftol * math::abs(f0) } else { 0.0 };
    let mut best = run(&f, x0, step, &opts, f_floor);
    let mut total = best.iterations;
    for _ in 0..opts.restarts {
        if total >= opts.max_iter {
            break;
        }
        let steps: Vec<f64> = step
            .iter()
            .zip(&best.x)
            .map(|(s, x)| (0.05 * math::abs(*x)).max(1e-3 * math::abs(*s)).min(math::abs(*s)))
            .collect();
        let again = run(&f, &best.x, &steps, &SimplexOptions { max_iter: opts.max_iter - total, ..opts }, f_floor);
        total += again.iterations;
        let improved = again.f < best.f - opts.ftol * math::abs(best.f) - 1e-300;
        if again.f <= best.f {
            best = SimplexResult { iterations: total, ..again };
        }
        if !improved {
            break;
        }
    }
    best.iterations = total;
    best
}

fn run<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: &[f64], opts: &SimplexOptions, f_floor: f64) -> SimplexResult {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| sanitize(f(p))).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    for iter in 0..opts.max_iter {
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(core::cmp::Ordering::Equal));
        let (ib, iw, isw) = (order[0], order[n], order[n - 1]);

        let spread = vals[iw] - vals[ib];
        let f_ok = spread <= opts.ftol * (math::abs(vals[ib]) + f_floor) + 1e-300;
        let (mut x_ok, mut collapsed) = (true, true);
        for k in 0..n {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in &pts {
                lo = lo.min(p[k]);
                hi = hi.max(p[k]);
            }
            let scale = math::abs(pts[ib][k]) + math::abs(step[k]);
            x_ok &= hi - lo <= opts.xtol * scale;
            collapsed &= hi - lo <= 16.0 * f64::EPSILON * scale;
        }
        // a collapsed simplex cannot make progress against roundoff in f
        if x_ok && (f_ok || collapsed) {
            return SimplexResult { x: pts[ib].clone(), f: vals[ib], iterations: iter, converged: true };
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for k in 0..n {
                centroid[k] += pts[i][k] / n as f64;
            }
        }
        let along = |coef: f64, out: &mut Vec<f64>| {
            for k in 0..n {
                out[k] = centroid[k] + coef * (pts[iw][k] - centroid[k]);
            }
        };

        along(-1.0, &mut trial);
        let fr = sanitize(f(&trial));
        if fr < vals[ib] {
            along(-2.0, &mut trial2);
            let fe = sanitize(f(&trial2));
            if fe < fr {
                pts[iw].clone_from(&trial2);
                vals[iw] = fe;
            } else {
                pts[iw].clone_from(&trial);
                vals[iw] = fr;
            }
            continue;
        }
        if fr < vals[isw] {
            pts[iw].clone_from(&trial);
            vals[iw] = fr;
            continue;
        }
        let (coef, reference) = if fr < vals[iw] { (-0.5, fr) } else { (0.5, vals[iw]) };
        along(coef, &mut trial2);
        let fc = sanitize(f(&trial2));
        if fc < reference {
            pts[iw].clone_from(&trial2);
            vals[iw] = fc;
            continue;
        }
        // shrink towards the best point
        let best = pts[ib].clone();
        for i in 0..=n {
            if i == ib {
                continue;
            }
            for k in 0..n {
                pts[i][k] = best[k] + 0.5 * (pts[i][k] - best[k]);
            }
            vals[i] = sanitize(f(&pts[i]));
        }
    }
    let ib = (0..=n)
        .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(core::cmp::Ordering::Equal))
        .unwrap_or(0);
    SimplexResult { x: pts[ib].clone(), f: vals[ib], iterations: opts.max_iter, converged: false }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}
