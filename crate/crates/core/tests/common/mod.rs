#![allow(dead_code)]

/// Adaptive Simpson quadrature with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integral over `[0, ∞)` of a function bounded by `scale · e^{-rate x}`,
/// split into panels of two decay lengths.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: &F, rate: f64, scale: f64, rel_tol: f64) -> f64 {
    let panel = 2.0 / rate;
    let mut total = 0.0;
    for k in 0..40 {
        let (a, b) = (k as f64 * panel, (k + 1) as f64 * panel);
        let envelope = scale * (-2.0 * k as f64).exp();
        total += simpson(f, a, b, rel_tol * envelope * panel);
    }
    total
}
