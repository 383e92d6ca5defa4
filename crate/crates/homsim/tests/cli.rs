use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use homsim::core::params::{DetectorParams, Polarization};
use homsim::core::presets;
use homsim::reproduce::{decay_data, paper_config};
use serde_json::Value;
use tempfile::TempDir;

fn homsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homsim")).args(args).env_remove("HOMSIM_OUT").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, pol: Polarization, detector: DetectorParams) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, paper_config(pol, 20_000, 7).with_detector(detector).to_json()).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(cfg: &Path, out: &Path, seed: &str, format: &str) {
    let o = homsim(&["simulate", "--config", s(cfg), "--seed", seed, "--format", format, "--out", s(out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn simulate_is_reproducible_per_seed() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "par.json", Polarization::Parallel, presets::detector());
    let (a, b, c) = (t.path().join("a"), t.path().join("b"), t.path().join("c"));
    simulate(&cfg, &a, "3", "csv");
    simulate(&cfg, &b, "3", "csv");
    simulate(&cfg, &c, "4", "csv");
    for f in ["d3.csv", "d4.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert_ne!(fs::read(a.join(f)).unwrap(), fs::read(c.join(f)).unwrap());
    }
    let summary = |d: &Path| {
        let mut v = json(&d.join("summary.json"));
        v.as_object_mut().unwrap().remove("files");
        v
    };
    assert_eq!(summary(&a), summary(&b));
}

#[test]
fn binary_and_csv_tags_give_identical_metrics() {
    let t = TempDir::new().unwrap();
    let perp_cfg = write_config(t.path(), "perp.json", Polarization::Orthogonal, presets::detector());
    let par_cfg = write_config(t.path(), "par.json", Polarization::Parallel, presets::detector());
    let mut metrics = Vec::new();
    for fmt in ["csv", "bin"] {
        let (perp, par, out) = (t.path().join(format!("perp_{fmt}")), t.path().join(format!("par_{fmt}")), t.path().join(format!("out_{fmt}")));
        simulate(&perp_cfg, &perp, "1", fmt);
        simulate(&par_cfg, &par, "2", fmt);
        let f = |d: &Path, ch: &str| d.join(format!("{ch}.{fmt}"));
        let o = homsim(&[
            "analyze", "--config", s(&par_cfg),
            "--perp", s(&f(&perp, "d3")), s(&f(&perp, "d4")),
            "--par", s(&f(&par, "d3")), s(&f(&par, "d4")),
            "--out", s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(out.join("histogram_perp.csv").exists() && out.join("histogram_par.csv").exists());
        metrics.push(json(&out.join("metrics.json"))["metrics"].clone());
    }
    assert_eq!(metrics[0], metrics[1]);
    let pc = metrics[0]["pc"]["value"].as_f64().unwrap();
    assert!(pc > 0.0 && pc < 0.5, "{pc}");
}

#[test]
fn empty_tag_files_give_undefined_metrics() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "par.json", Polarization::Parallel, presets::detector());
    let (d3, d4) = (t.path().join("d3.csv"), t.path().join("d4.csv"));
    fs::write(&d3, "channel,timestamp_ps\n").unwrap();
    fs::write(&d4, "").unwrap();
    let o = homsim(&["analyze", "--config", s(&cfg), "--perp", s(&d3), s(&d4), "--par", s(&d3), s(&d4), "--out", s(t.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = &json(&t.path().join("metrics.json"))["metrics"];
    for k in ["pc", "pc_post", "ratio_par_b", "ratio_perp_b"] {
        assert!(m[k].is_null(), "{k}: {}", m[k]);
    }
}

#[test]
fn input_errors_map_to_exit_codes() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "par.json", Polarization::Parallel, presets::detector());
    let good = t.path().join("d3.csv");
    fs::write(&good, "channel,timestamp_ps\n3,10\n3,20\n").unwrap();

    let o = homsim(&["analyze", "--config", s(&cfg), "--par", s(&good), s(&good)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let bad = t.path().join("d4.csv");
    fs::write(&bad, "channel,timestamp_ps\n4,10\n4,x\n").unwrap();
    let o = homsim(&["analyze", "--config", s(&cfg), "--par", s(&good), s(&bad)]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("d4.csv:3:"), "{}", stderr(&o));

    let missing = t.path().join("nope.csv");
    let o = homsim(&["analyze", "--config", s(&cfg), "--par", s(&good), s(&missing)]);
    assert_eq!(code(&o), 4);

    let text = fs::read_to_string(&cfg).unwrap().replacen("\"t1_ps\"", "\"t1_ns\"", 1);
    let typo = t.path().join("typo.json");
    fs::write(&typo, text).unwrap();
    let o = homsim(&["curve", "--config", s(&typo), "--out", s(t.path())]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("emitters[0]"), "{}", stderr(&o));

    let text = fs::read_to_string(&cfg).unwrap().replacen("\"t2_ps\": 580.0", "\"t2_ps\": 5800.0", 1);
    let unphysical = t.path().join("unphysical.json");
    fs::write(&unphysical, text).unwrap();
    let o = homsim(&["curve", "--config", s(&unphysical), "--out", s(t.path())]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    assert_eq!(code(&homsim(&["simulate"])), 2);
    assert_eq!(code(&homsim(&["frobnicate"])), 2);
    assert_eq!(code(&homsim(&["hbt", "--config", s(&cfg), "--emitter", "3"])), 2);
}

#[test]
fn delta_response_curve_is_unchanged_by_convolution() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "ideal.json", Polarization::Parallel, DetectorParams::ideal());
    let o = homsim(&["curve", "--config", s(&cfg), "--out", s(t.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(t.path().join("curve.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau_ps,perp,par,perp_conv,par_conv"));
    let mut n = 0;
    for line in lines {
        let v: Vec<&str> = line.split(',').collect();
        assert_eq!(v[1], v[3]);
        assert_eq!(v[2], v[4]);
        n += 1;
    }
    assert!(n > 1000);
    assert!(t.path().join("curve_summary.json").exists());
}

#[test]
fn fits_from_files() {
    let t = TempDir::new().unwrap();
    // noiseless Lorentzian seen through a Lorentzian instrument
    let (fwhm, inst) = (presets::QD1_LINEWIDTH_GHZ, presets::SPECTROMETER_FWHM_GHZ);
    let hw = 0.5 * (fwhm + inst);
    let mut spec = String::from("frequency_ghz,counts\n");
    for i in 0..201 {
        let x = -5.0 + 0.05 * i as f64;
        spec += &format!("{x},{}\n", 1000.0 * hw * hw / (x * x + hw * hw) + 10.0);
    }
    let sp = t.path().join("spectrum.csv");
    fs::write(&sp, spec).unwrap();
    let o = homsim(&["fit-spectrum", s(&sp), "--out", s(t.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&t.path().join("fit_spectrum.json"));
    let t2 = r["t2"]["value"].as_f64().unwrap();
    assert!((t2 - 1e3 / (std::f64::consts::PI * fwhm)).abs() < 1e-3, "{t2}");

    let d = DetectorParams::gaussian(640.0);
    let data = decay_data(&presets::qd1(), &d, 200_000, 3).unwrap();
    let mut csv = String::from("time_ps,counts\n");
    for (x, y) in data.x.iter().zip(&data.y) {
        csv += &format!("{x},{y}\n");
    }
    let dp = t.path().join("decay.csv");
    fs::write(&dp, csv).unwrap();
    let o = homsim(&["fit-decay", s(&dp), "--irf-fwhm-ps", "640", "--out", s(t.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&t.path().join("fit_decay.json"));
    let p = r["params"].as_array().unwrap().iter().find(|p| p["name"] == "lifetime_ps").unwrap().clone();
    let (v, sig) = (p["value"].as_f64().unwrap(), p["sigma"].as_f64().unwrap());
    assert!((v - 610.0).abs() < 5.0 * sig, "{v} ± {sig}");
}

#[test]
fn hbt_reports_configured_residual() {
    let t = TempDir::new().unwrap();
    let mut cfg = paper_config(Polarization::Orthogonal, 300_000, 5);
    cfg.detector = presets::detector();
    let p = t.path().join("cfg.json");
    fs::write(&p, cfg.to_json()).unwrap();
    let o = homsim(&["hbt", "--config", s(&p), "--emitter", "2", "--out", s(t.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&t.path().join("hbt.json"));
    let g = r["purity"]["value"].as_f64().unwrap();
    assert!((g - presets::QD2_RESIDUAL).abs() < 0.02, "{g}");
    assert!(t.path().join("histogram_hbt.csv").exists());
}

#[test]
fn output_directory_from_environment() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "par.json", Polarization::Parallel, presets::detector());
    let target = t.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_homsim"))
        .args(["curve", "--config", s(&cfg)])
        .env("HOMSIM_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(target.join("curve.csv").exists());
}
