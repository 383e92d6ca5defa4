//! Acceptance criteria. Each criterion prints one PASS or FAIL line; the
//! process exits non-zero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- <substring>`.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use homsim::core::analysis::{correlate, correlate_tags, hbt_purity, CorrelationHistogram};
use homsim::core::correlation::{center_peak_density, convolve_with_irf, full_correlation, max_coalescence, CorrelationModel};
use homsim::core::fitting::{fit_decay, DecayModel};
use homsim::core::montecarlo::{generate_streams_with_counters, hbt_config, SimConfig};
use homsim::core::params::t2_from_linewidth;
use homsim::core::presets::{self, reported};
use homsim::core::{CorrelationCurve, DetectorParams, EmitterParams, IrfShape, Polarization, SetupParams, TauGrid};
use homsim::parallel;
use homsim::pipeline::CurveSet;
use homsim::reproduce::{self, calibrated_config, decay_data, paper_config};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const T: f64 = presets::REP_PERIOD_PS;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn in_band(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

fn c1_closed_form() -> Outcome {
    let v = max_coalescence(&presets::qd1(), &presets::qd2()).unwrap();
    outcome(in_band(v, 0.28, 0.31), format!("Pc,max = {v:.4}, band [0.28, 0.31], reported {}", reported::PC_MAX))
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let left = (m - a) / 6.0 * (fa + 4.0 * f(lm) + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * f(rm) + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson(f, a, m, 0.5 * tol, depth - 1) + simpson(f, m, b, 0.5 * tol, depth - 1)
}

/// ∫₀^∞ of a function under the envelope `scale · e^{-rate t}`.
fn integrate_tail(f: &dyn Fn(f64) -> f64, rate: f64, scale: f64, rel_tol: f64) -> f64 {
    let panel = 2.0 / rate;
    (0..40)
        .map(|k| {
            let a = k as f64 * panel;
            simpson(f, a, a + panel, rel_tol * scale * (-2.0 * k as f64).exp() * panel, 40)
        })
        .sum()
}

fn emitter() -> impl Strategy<Value = EmitterParams> {
    (100.0f64..3000.0, 0.05f64..=1.0, -0.01f64..0.01).prop_map(|(t1, frac, det)| EmitterParams::new(t1, 2.0 * t1 * frac).with_detuning(det))
}

fn c2_oracle_equivalence() -> Outcome {
    let worst = std::cell::Cell::new(0.0f64);
    let cases = std::cell::Cell::new(0usize);
    let mut runner = TestRunner::new(Config { cases: 128, failure_persistence: None, ..Config::default() });
    let res = runner.run(&(emitter(), emitter()), |(e1, e2)| {
        let perp = SetupParams::new(1.0, Polarization::Orthogonal, 1e6);
        let par = perp.with_polarization(Polarization::Parallel);
        let slowest = (1.0 / e1.t1).min(1.0 / e2.t1);
        let peak = center_peak_density(0.0, &e1, &e2, &perp).unwrap();
        let area = |s: &SetupParams| integrate_tail(&|t| center_peak_density(t, &e1, &e2, s).unwrap(), slowest, peak, 1e-11);
        let (ap, aq) = (area(&perp), area(&par));
        let numeric = (ap - aq) / ap;
        let closed = max_coalescence(&e1, &e2).unwrap();
        let rel = (closed / numeric - 1.0).abs();
        worst.set(worst.get().max(rel));
        cases.set(cases.get() + 1);
        prop_assert!(rel < 1e-6, "{closed} vs {numeric}");
        Ok(())
    });
    outcome(res.is_ok(), format!("{} parameter sets, worst relative deviation {:.2e} (limit 1e-6)", cases.get(), worst.get()))
}

fn c3_linewidth() -> Outcome {
    let a = t2_from_linewidth(presets::QD1_LINEWIDTH_GHZ).unwrap();
    let b = t2_from_linewidth(presets::QD2_LINEWIDTH_GHZ).unwrap();
    let pass = (a - 580.0).abs() <= 20.0 && (b - 390.0).abs() <= 20.0;
    outcome(pass, format!("T2 = {a:.1} ps (580 ± 20), {b:.1} ps (390 ± 20)"))
}

fn c4_area_preservation() -> Outcome {
    let cfg = paper_config(Polarization::Orthogonal, 1, 0);
    let set = CurveSet::compute(&cfg, &cfg.detector).unwrap();
    let (raw, conv) = (set.pc(false, T).unwrap(), set.pc(true, T).unwrap());
    outcome((raw - conv).abs() < 1e-3, format!("Pc unconvolved {raw:.5}, convolved {conv:.5}, |Δ| = {:.1e} (limit 1e-3)", (raw - conv).abs()))
}

fn c5_postselection_ideal() -> Outcome {
    let cfg = paper_config(Polarization::Orthogonal, 1, 0).with_detector(DetectorParams::ideal());
    let set = CurveSet::compute(&cfg, &cfg.detector).unwrap();
    let v = set.pc_post(false).unwrap();
    outcome(in_band(v, 0.90, 1.00), format!("P'c = {v:.4}, band [0.90, 1.00]"))
}

fn c6_postselection_real() -> Outcome {
    let (cfg, cal) = calibrated_config(Polarization::Orthogonal, 1, 0).unwrap();
    let set = CurveSet::compute(&cfg, &cfg.detector).unwrap();
    let pc = set.pc(true, T).unwrap();
    let v = set.pc_post(true).unwrap();
    let pass = in_band(v, 0.35, 0.55) && (pc - reported::PC.0).abs() < 1e-3;
    outcome(
        pass,
        format!("P'c = {v:.4}, band [0.35, 0.55]; calibrated Pc = {pc:.4} (M² = {:.4}, background {:.4})", cal.visibility, cal.background_rate),
    )
}

fn c7_classical_limit() -> Outcome {
    let r = reproduce::reproduce(10_000_000, 1).unwrap();
    let par = r.row("A∥/B").unwrap();
    let perp = r.row("A⊥/B uncalibrated ideal").unwrap();
    let (a, b) = (par.computed, perp.computed);
    let pass = a.value < 0.5 && in_band(a.value, 0.47, 0.50) && (b.value - 0.5).abs() <= 3.0 * b.sigma;
    outcome(
        pass,
        format!(
            "calibrated A∥/B = {:.4} ± {:.4} (band [0.47, 0.50]); ideal A⊥/B = {:.4} ± {:.4} (0.5 within 3σ)",
            a.value, a.sigma, b.value, b.sigma
        ),
    )
}

fn c8_mc_vs_analytic() -> Outcome {
    let n = 1_000_000;
    let cfg = paper_config(Polarization::Parallel, n, 17);
    let (d3, d4, _) = parallel::generate_streams(&cfg.sim_config()).unwrap();
    let h = correlate(&d3, &d4, 256, 3.5 * T).unwrap();
    // side peaks beyond the histogram still leak into its outer bins
    let grid = TauGrid::new(4.5 * T, 20.0).unwrap();
    let [e1, e2] = &cfg.emitters;
    let curve = full_correlation(&grid, e1, e2, &cfg.setup, 4).unwrap();
    let conv = convolve_with_irf(&curve, &cfg.detector).unwrap();
    let expected = conv.integrate_bins(256.0, h.half_bins);
    let (mut chi2, mut dof) = (0.0, 0usize);
    for (&o, &e) in h.counts.iter().zip(&expected) {
        let e = e * n as f64;
        if e >= 10.0 {
            chi2 += (o as f64 - e).powi(2) / e;
            dof += 1;
        }
    }
    let red = chi2 / dof as f64;
    outcome(red < 1.5, format!("χ²/dof = {red:.3} over {dof} bins (limit 1.5)"))
}

fn c9_fit_recovery() -> Outcome {
    let d = DetectorParams::gaussian(reproduce::DECAY_IRF_FWHM_PS);
    let q2 = decay_data(&presets::qd2_with_dark_state(), &d, reproduce::DECAY_EVENTS, 0xD2).unwrap();
    let f2 = fit_decay(&q2, DecayModel::Biexp, &d).unwrap();
    let q1 = decay_data(&presets::qd1(), &d, reproduce::DECAY_EVENTS, 0xD1).unwrap();
    let f1 = fit_decay(&q1, DecayModel::SingleExp, &d).unwrap();
    let (fast, slow, t1) = (f2.value("lifetime_ps"), f2.value("slow_lifetime_ps"), f1.value("lifetime_ps"));
    let pass = (fast - 950.0).abs() <= 15.0 && (slow - 4000.0).abs() <= 500.0 && (t1 - 610.0).abs() <= 10.0;
    outcome(pass, format!("QD2 {fast:.1} ps (950 ± 15), dark {slow:.0} ps (4000 ± 500); QD1 {t1:.1} ps (610 ± 10)"))
}

fn c10_hbt() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, e) in [presets::qd1_measured(), presets::qd2_measured()].into_iter().enumerate() {
        let cfg = hbt_config(&e, T, &presets::detector(), 2_000_000, 30 + k as u64);
        let (d3, d4, _) = parallel::generate_streams(&cfg).unwrap();
        let h = correlate(&d3, &d4, 256, 3.5 * T).unwrap();
        let g = hbt_purity(&h, T, T).unwrap();
        pass &= (g.value - e.multiphoton_residual).abs() <= 0.01;
        parts.push(format!("{:.4} ± {:.4} (configured {})", g.value, g.sigma, e.multiphoton_residual));
    }
    outcome(pass, format!("g2(0) area ratios {}", parts.join(", ")))
}

fn emitter_full() -> impl Strategy<Value = EmitterParams> {
    (100.0..2000.0f64, 0.05..1.0f64, 0.1..1.0f64, 0.0..0.3f64, -0.02..0.02f64, prop::option::of((1000.0..8000.0f64, 0.0..0.5f64))).prop_map(
        |(t1, frac, eta, r, det, ds)| {
            let e = EmitterParams::new(t1, 2.0 * t1 * frac).with_efficiency(eta).with_residual(r).with_detuning(det);
            match ds {
                Some((l, f)) => e.with_dark_state(l, f),
                None => e,
            }
        },
    )
}

fn sorted(max_len: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..200_000, 0..max_len).prop_map(|mut v| {
        v.sort_unstable();
        v
    })
}

fn c11_properties() -> Outcome {
    let cfg = |cases| Config { cases, failure_persistence: None, ..Config::default() };
    let mut failures = Vec::new();
    let mut check = |name: &str, r: Result<(), String>| {
        if let Err(e) = r {
            failures.push(format!("{name}: {e}"));
        }
    };

    let r = TestRunner::new(cfg(256)).run(&(emitter_full(), emitter_full(), 0.0..1.0f64, -5000.0..5000.0f64), |(e1, e2, m, tau)| {
        let setup = SetupParams::new(m, Polarization::Orthogonal, T);
        let perp = CorrelationModel::new(&e1, &e2, &setup).unwrap();
        let par = CorrelationModel::new(&e1, &e2, &setup.with_polarization(Polarization::Parallel)).unwrap();
        for c in [&perp, &par] {
            prop_assert!((c.center(tau) - c.center(-tau)).abs() <= 1e-12 * c.center(tau).abs().max(1e-300));
        }
        let raw = par.center_incoherent(tau) - par.interference(tau);
        prop_assert!(raw >= -1e-12 * par.center_incoherent(tau), "negative density {raw}");
        let (z1, z2) = (e1.with_detuning(0.0), e2.with_detuning(0.0));
        let zp = CorrelationModel::new(&z1, &z2, &setup).unwrap();
        let zq = CorrelationModel::new(&z1, &z2, &setup.with_polarization(Polarization::Parallel)).unwrap();
        prop_assert!(zq.center(tau) <= zp.center(tau) * (1.0 + 1e-12));
        Ok(())
    });
    check("symmetry / ordering / non-negativity", r.map_err(|e| e.to_string()));

    let r = TestRunner::new(cfg(64)).run(
        &(prop::collection::vec((-2000.0..2000.0f64, 20.0..400.0f64, 0.0..1.0f64), 1..5), prop_oneof![Just(IrfShape::Gaussian), Just(IrfShape::TwoSidedExponential)], 100.0..800.0f64),
        |(bumps, shape, fwhm)| {
            let d = DetectorParams::from_combined_fwhm(shape, fwhm);
            let h = (d.irf_fwhm / 8.0).min(10.0);
            let n = (15_000.0 / h) as i64;
            let tau: Vec<f64> = (-n..=n).map(|i| i as f64 * h).collect();
            let density = tau.iter().map(|&t| bumps.iter().map(|&(c, w, a)| a * (-0.5 * ((t - c) / w).powi(2)).exp()).sum()).collect();
            let curve = CorrelationCurve::new(tau, density, Polarization::Parallel).unwrap();
            let out = convolve_with_irf(&curve, &d).unwrap();
            let (a0, a1): (f64, f64) = (curve.density.iter().sum(), out.density.iter().sum());
            prop_assert!((a0 - a1).abs() <= 1e-9 * a0);
            Ok(())
        },
    );
    check("convolution mass", r.map_err(|e| e.to_string()));

    let r = TestRunner::new(cfg(128)).run(&(sorted(1000), sorted(1000), 1u64..2000), |(a, b, w)| {
        let fast = correlate_tags(&a, &b, w, 20_000.0).unwrap();
        let mut slow = CorrelationHistogram::empty(w, 20_000.0).unwrap();
        for &x in &a {
            for &y in &b {
                if let Some(i) = slow.bin_of(y as i64 - x as i64) {
                    slow.counts[i] += 1;
                }
            }
        }
        prop_assert_eq!(fast.counts, slow.counts);
        Ok(())
    });
    check("brute-force pairing", r.map_err(|e| e.to_string()));

    let sim = SimConfig::new(
        presets::qd1_measured(),
        presets::qd2_with_dark_state(),
        presets::setup(Polarization::Parallel),
        presets::detector().with_dark_rate(1e-7),
        200_000,
        77,
    );
    let reference = generate_streams_with_counters(&sim).unwrap();
    for threads in [1, 2, 3, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let got = pool.install(|| parallel::generate_streams(&sim)).unwrap();
        if got != reference {
            failures.push(format!("{threads} workers changed the streams"));
        }
    }
    let again = generate_streams_with_counters(&sim).unwrap();
    if again != reference {
        failures.push("repeated run with fixed seed differs".into());
    }

    let detail = if failures.is_empty() {
        "symmetry, C∥ ≤ C⊥, non-negativity, mass, pairing, seed and worker-count determinism".to_string()
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    ("1 closed-form coalescence bound", c1_closed_form),
    ("2 closed form vs integrated density", c2_oracle_equivalence),
    ("3 linewidth to coherence time", c3_linewidth),
    ("4 area preservation under detector response", c4_area_preservation),
    ("5 post-selection, ideal detectors", c5_postselection_ideal),
    ("6 post-selection, 640 ps response", c6_postselection_real),
    ("7 classical-limit ratio", c7_classical_limit),
    ("8 Monte Carlo vs analytic histogram", c8_mc_vs_analytic),
    ("9 decay fit recovery", c9_fit_recovery),
    ("10 autocorrelation residuals", c10_hbt),
    ("11 property suites", c11_properties),
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|q| name.contains(q.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {name}: {} [{secs:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
