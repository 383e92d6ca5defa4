//! The closed-form correlation densities against direct numerical
//! integration of the two-time wavepacket model over the emission time.

mod common;

use common::{integrate_tail, simpson};
use homsim_core::correlation::{center_peak_density, max_coalescence, side_peak_density};
use homsim_core::{EmitterParams, Polarization, SetupParams};
use proptest::prelude::*;

/// Coincidence density at delay `tau` from the emission-time integral
///
/// C(τ) = ¼ ∫ [p1(t) p2(t+τ) + p2(t) p1(t+τ)] dt
///      − ½ M² ∫ ψ1(t) ψ2(t) ψ1(t+τ) ψ2(t+τ) dt · e^{-γ*|τ|} cos(Δτ)
///
/// with `p = Γ e^{-Γt}` and real amplitudes `ψ = √Γ e^{-Γt/2}`.
fn oracle(tau: f64, e1: &EmitterParams, e2: &EmitterParams, m2: f64, parallel: bool) -> f64 {
    let tau = tau.abs();
    let (g1, g2) = (1.0 / e1.t1, 1.0 / e2.t1);
    let p = |g: f64, t: f64| g * (-g * t).exp();
    let incoherent = |t: f64| 0.25 * (p(g1, t) * p(g2, t + tau) + p(g2, t) * p(g1, t + tau));
    let rate = g1 + g2;
    let mut c = integrate_tail(&incoherent, rate, incoherent(0.0), 1e-12);
    if parallel {
        let amp = |g: f64, t: f64| g.sqrt() * (-0.5 * g * t).exp();
        let overlap = |t: f64| amp(g1, t) * amp(g2, t) * amp(g1, t + tau) * amp(g2, t + tau);
        let dephasing = (1.0 / e1.t2 - 0.5 * g1) + (1.0 / e2.t2 - 0.5 * g2);
        let phase = (-dephasing * tau).exp() * ((e1.detuning - e2.detuning) * tau).cos();
        c -= 0.5 * m2 * integrate_tail(&overlap, rate, overlap(0.0), 1e-12) * phase;
    }
    c
}

#[test]
fn reference_parameters_match_emission_time_integral() {
    let (e1, e2) = (EmitterParams::new(610.0, 580.0), EmitterParams::new(950.0, 390.0));
    let perp = SetupParams::new(1.0, Polarization::Orthogonal, 13_140.0);
    let par = perp.with_polarization(Polarization::Parallel);
    for k in -300..=300 {
        let tau = k as f64 * 10.0;
        let cp = center_peak_density(tau, &e1, &e2, &perp).unwrap();
        let cq = center_peak_density(tau, &e1, &e2, &par).unwrap();
        let (op, oq) = (oracle(tau, &e1, &e2, 1.0, false), oracle(tau, &e1, &e2, 1.0, true));
        assert!((cp / op - 1.0).abs() < 1e-6, "τ={tau}: {cp} vs {op}");
        // C∥ vanishes at τ = 0, so compare the ratio rather than C∥ itself
        assert!((cq / cp - oq / op).abs() < 1e-6, "τ={tau}: {} vs {}", cq / cp, oq / op);
    }
}

fn emitter() -> impl Strategy<Value = EmitterParams> {
    (100.0f64..3000.0, 0.05f64..=1.0, -0.01f64..0.01).prop_map(|(t1, frac, det)| EmitterParams::new(t1, 2.0 * t1 * frac).with_detuning(det))
}

/// Numerically integrated `(A⊥ - A∥)/A⊥` from the density itself.
fn integrated_pc(e1: &EmitterParams, e2: &EmitterParams) -> f64 {
    let perp = SetupParams::new(1.0, Polarization::Orthogonal, 1e6);
    let par = perp.with_polarization(Polarization::Parallel);
    let slowest = (1.0 / e1.t1).min(1.0 / e2.t1);
    let peak = center_peak_density(0.0, e1, e2, &perp).unwrap();
    let area = |s: &SetupParams| 2.0 * integrate_tail(&|t| center_peak_density(t, e1, e2, s).unwrap(), slowest, peak, 1e-11);
    let (ap, aq) = (area(&perp), area(&par));
    (ap - aq) / ap
}

#[test]
fn max_coalescence_matches_integrated_areas() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig { cases: 120, ..ProptestConfig::default() });
    runner
        .run(&(emitter(), emitter()), |(e1, e2)| {
            let closed = max_coalescence(&e1, &e2).unwrap();
            let numeric = integrated_pc(&e1, &e2);
            prop_assert!((closed / numeric - 1.0).abs() < 1e-6, "{closed} vs {numeric}");
            Ok(())
        })
        .unwrap();
}

#[test]
fn side_peak_area_is_twice_orthogonal_center_for_equal_emitters() {
    let e = EmitterParams::new(700.0, 900.0);
    let s = SetupParams::new(1.0, Polarization::Orthogonal, 13_140.0);
    let side = simpson(&|t| side_peak_density(t, &e, &e, &s).unwrap(), -30_000.0, 30_000.0, 1e-12);
    let center = simpson(&|t| center_peak_density(t, &e, &e, &s).unwrap(), -30_000.0, 30_000.0, 1e-12);
    assert!((side / center - 2.0).abs() < 1e-8, "{side} {center}");
}

#[test]
fn orthogonal_width_scales_with_lifetime() {
    // T2 fixed and below both lifetimes' limits; C⊥ depends on T1 only
    let fwhm = |t1: f64| {
        let e1 = EmitterParams::new(t1, 300.0);
        let e2 = EmitterParams::new(1.5 * t1, 300.0);
        let s = SetupParams::new(1.0, Polarization::Orthogonal, 1e6);
        let c = |t: f64| center_peak_density(t, &e1, &e2, &s).unwrap();
        let half = 0.5 * c(0.0);
        let (mut lo, mut hi) = (0.0, 20.0 * t1);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if c(mid) > half {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        2.0 * lo
    };
    let (w1, w2) = (fwhm(400.0), fwhm(800.0));
    assert!((w2 / w1 - 2.0).abs() < 1e-9, "{w1} {w2}");
}

#[test]
fn dip_half_width_tracks_coherence_times() {
    let (e1, e2) = (EmitterParams::new(610.0, 580.0), EmitterParams::new(950.0, 390.0));
    let perp = SetupParams::new(1.0, Polarization::Orthogonal, 13_140.0);
    let par = perp.with_polarization(Polarization::Parallel);
    let depth = |t: f64| center_peak_density(t, &e1, &e2, &perp).unwrap() - center_peak_density(t, &e1, &e2, &par).unwrap();
    let tau_h = std::f64::consts::LN_2 / (1.0 / 580.0 + 1.0 / 390.0);
    assert!((depth(tau_h) / depth(0.0) - 0.5).abs() < 1e-12);
}
