//! Command implementations. Each reads its inputs, runs the core routines
//! and writes its outputs into a directory.

use std::path::{Path, PathBuf};

use homsim_core::analysis::{correlate, integrate_peaks, metrics, CorrelationHistogram, InterferenceMetrics};
use homsim_core::areas::{coalescence_probability, curve_peak_areas, postselected_coalescence};
use homsim_core::correlation::{convolve_with_irf, full_correlation, t2_from_linewidth};
use homsim_core::fitting::{fit_decay, fit_lorentzian_with, DecayModel, FitResult, InstrumentShape};
use homsim_core::montecarlo::{hbt_config, SeedRecord, SimCounters, TimeTagStream};
use homsim_core::params::{DetectorParams, Polarization};
use homsim_core::{CorrelationCurve, Estimate, PeakAreas, TauGrid};
use serde::Serialize;

use crate::config::{AnalysisSettings, RunConfig};
use crate::error::{CliError, Result};
use crate::formats::{self, TagFormat};
use crate::parallel;

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub seed: SeedRecord,
    pub polarization: Polarization,
    pub counters: SimCounters,
    pub tags_d3: usize,
    pub tags_d4: usize,
    pub duration_ps: u64,
    pub files: [PathBuf; 2],
    pub config: RunConfig,
}

/// Writes `d3.<ext>`, `d4.<ext>` and `summary.json`.
pub fn simulate(cfg: &RunConfig, out: &Path, format: TagFormat) -> Result<SimulationSummary> {
    let (d3, d4, counters) = parallel::generate_streams(&cfg.sim_config())?;
    let files = [out.join(format!("d3.{}", format.extension())), out.join(format!("d4.{}", format.extension()))];
    formats::write_tags(&files[0], &d3, format)?;
    formats::write_tags(&files[1], &d4, format)?;
    let summary = SimulationSummary {
        seed: SeedRecord::new(cfg.simulation.seed),
        polarization: cfg.setup.polarization,
        counters,
        tags_d3: d3.len(),
        tags_d4: d4.len(),
        duration_ps: d3.duration,
        files,
        config: cfg.clone(),
    };
    formats::write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Loads two tag files and orders them as (D3, D4).
pub fn load_pair(a: &Path, b: &Path) -> Result<(TimeTagStream, TimeTagStream)> {
    let (sa, sb) = (formats::read_tags(a)?, formats::read_tags(b)?);
    if sa.channel == sb.channel {
        return Err(CliError::Config(format!(
            "{} and {} both carry channel {}; need one file per detector",
            a.display(),
            b.display(),
            sa.channel.as_str()
        )));
    }
    Ok(if sa.channel.number() < sb.channel.number() { (sa, sb) } else { (sb, sa) })
}

/// Histogram of `t(D4) - t(D3)`.
pub fn histogram(d3: &TimeTagStream, d4: &TimeTagStream, a: &AnalysisSettings) -> Result<CorrelationHistogram> {
    Ok(correlate(d3, d4, a.bin_width_ps, a.max_tau_ps)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub tags_d3: usize,
    pub tags_d4: usize,
    pub coincidences: u64,
    pub areas: PeakAreas,
    /// Centre area over mean side area.
    pub ratio_center_b: Option<Estimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub settings: AnalysisSettings,
    pub perp: Option<DatasetSummary>,
    pub par: Option<DatasetSummary>,
    /// Present when both polarizations were supplied.
    pub metrics: Option<InterferenceMetrics>,
}

fn summarize(h: &CorrelationHistogram, d3: &TimeTagStream, d4: &TimeTagStream, a: &AnalysisSettings, rep_period: f64) -> Result<DatasetSummary> {
    let areas = integrate_peaks(h, rep_period, a.peak_window_ps)?;
    Ok(DatasetSummary {
        tags_d3: d3.len(),
        tags_d4: d4.len(),
        coincidences: h.total(),
        ratio_center_b: homsim_core::areas::coincidence_ratio(&areas).ok(),
        areas,
    })
}

/// Analyses orthogonal and/or parallel tag pairs. Writes
/// `histogram_perp.csv`, `histogram_par.csv` and `metrics.json`.
pub fn analyze(perp: Option<[&Path; 2]>, par: Option<[&Path; 2]>, a: &AnalysisSettings, rep_period: f64, out: &Path) -> Result<AnalysisReport> {
    if perp.is_none() && par.is_none() {
        return Err(CliError::Config("no tag files given".into()));
    }
    let run = |files: Option<[&Path; 2]>, name: &str| -> Result<Option<(CorrelationHistogram, DatasetSummary)>> {
        let Some([f1, f2]) = files else { return Ok(None) };
        let (d3, d4) = load_pair(f1, f2)?;
        let h = histogram(&d3, &d4, a)?;
        formats::write_atomic(&out.join(format!("histogram_{name}.csv")), formats::histogram_csv(&h).as_bytes())?;
        let s = summarize(&h, &d3, &d4, a, rep_period)?;
        Ok(Some((h, s)))
    };
    let perp = run(perp, "perp")?;
    let par = run(par, "par")?;
    let m = match (&perp, &par) {
        (Some((hp, sp)), Some((hq, sq))) => Some(metrics(&sp.areas, &sq.areas, hp, hq, a.post_window_ps)?),
        _ => None,
    };
    let report = AnalysisReport { settings: *a, perp: perp.map(|p| p.1), par: par.map(|p| p.1), metrics: m };
    formats::write_json(&out.join("metrics.json"), &report)?;
    Ok(report)
}

/// Analytic curves of both polarizations, before and after the detector
/// response.
#[derive(Debug, Clone)]
pub struct CurveSet {
    pub grid: TauGrid,
    pub n_side: usize,
    pub perp: CorrelationCurve,
    pub par: CorrelationCurve,
    pub perp_conv: CorrelationCurve,
    pub par_conv: CorrelationCurve,
}

impl CurveSet {
    pub fn compute(cfg: &RunConfig, detector: &DetectorParams) -> Result<CurveSet> {
        let (grid, n_side) = cfg.curve_grid()?;
        let [e1, e2] = &cfg.emitters;
        let perp = full_correlation(&grid, e1, e2, &cfg.setup.with_polarization(Polarization::Orthogonal), n_side)?;
        let par = full_correlation(&grid, e1, e2, &cfg.setup.with_polarization(Polarization::Parallel), n_side)?;
        let perp_conv = convolve_with_irf(&perp, detector)?;
        let par_conv = convolve_with_irf(&par, detector)?;
        Ok(CurveSet { grid, n_side, perp, par, perp_conv, par_conv })
    }

    /// Pc from full-period peak areas.
    pub fn pc(&self, convolved: bool, rep_period: f64) -> Result<f64> {
        let (a, b) = if convolved { (&self.perp_conv, &self.par_conv) } else { (&self.perp, &self.par) };
        let n = self.n_side.saturating_sub(1).max(1);
        let ap = curve_peak_areas(a, rep_period, rep_period, n)?;
        let aq = curve_peak_areas(b, rep_period, rep_period, n)?;
        Ok(coalescence_probability(&ap, &aq)?.value)
    }

    /// P′c evaluated at τ = 0 (window of one grid step).
    pub fn pc_post(&self, convolved: bool) -> Result<f64> {
        let (a, b) = if convolved { (&self.perp_conv, &self.par_conv) } else { (&self.perp, &self.par) };
        Ok(postselected_coalescence(a, b, self.grid.spacing)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSummary {
    pub spacing_ps: f64,
    pub half_span_ps: f64,
    pub n_side_peaks: usize,
    pub pc: f64,
    pub pc_convolved: f64,
    pub pc_post: f64,
    pub pc_post_convolved: f64,
}

/// Writes `curve.csv` and `curve_summary.json`.
pub fn curve(cfg: &RunConfig, out: &Path) -> Result<CurveSummary> {
    let set = CurveSet::compute(cfg, &cfg.detector)?;
    let t = cfg.setup.rep_period;
    let csv = formats::curve_csv(&set.perp, &set.par, &set.perp_conv, &set.par_conv)?;
    formats::write_atomic(&out.join("curve.csv"), csv.as_bytes())?;
    let summary = CurveSummary {
        spacing_ps: set.grid.spacing,
        half_span_ps: set.grid.covered_half_span(),
        n_side_peaks: set.n_side,
        pc: set.pc(false, t)?,
        pc_convolved: set.pc(true, t)?,
        pc_post: set.pc_post(false)?,
        pc_post_convolved: set.pc_post(true)?,
    };
    formats::write_json(&out.join("curve_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumFit {
    pub fit: FitResult,
    /// Coherence time implied by the deconvolved width.
    pub t2: Estimate,
}

/// Fits a Lorentzian line (x in GHz) and converts its width to T2. Writes
/// `fit_spectrum.json`.
pub fn fit_spectrum(input: &Path, instrument_fwhm_ghz: f64, shape: InstrumentShape, out: &Path) -> Result<SpectrumFit> {
    let s = formats::read_sampled_curve(input)?;
    let fit = fit_lorentzian_with(&s, instrument_fwhm_ghz, shape)?;
    let (w, sw) = (fit.value("fwhm_ghz"), fit.sigma("fwhm_ghz"));
    let t2 = t2_from_linewidth(w)?;
    let result = SpectrumFit { t2: Estimate::new(t2, t2 * sw / w), fit };
    formats::write_json(&out.join("fit_spectrum.json"), &result)?;
    Ok(result)
}

/// Fits a lifetime histogram (x in ps). Writes `fit_decay.json`.
pub fn fit_decay_file(input: &Path, model: DecayModel, detector: &DetectorParams, out: &Path) -> Result<FitResult> {
    let s = formats::read_sampled_curve(input)?;
    let fit = fit_decay(&s, model, detector)?;
    formats::write_json(&out.join("fit_decay.json"), &fit)?;
    Ok(fit)
}

#[derive(Debug, Clone, Serialize)]
pub struct HbtReport {
    pub emitter: usize,
    pub configured_residual: f64,
    pub purity: Estimate,
    pub areas: PeakAreas,
    pub seed: SeedRecord,
    pub n_pulses: u64,
}

/// Single-source autocorrelation of emitter `index` (0 or 1). Writes
/// `histogram_hbt.csv` and `hbt.json`.
pub fn hbt(cfg: &RunConfig, index: usize, out: &Path) -> Result<HbtReport> {
    let e = cfg.emitters.get(index).ok_or_else(|| CliError::Config("emitter index must be 1 or 2".into()))?;
    let a = cfg.analysis_settings();
    let sim = hbt_config(e, cfg.setup.rep_period, &cfg.detector, cfg.simulation.n_pulses, cfg.simulation.seed);
    let (d3, d4, _) = parallel::generate_streams(&sim)?;
    let h = histogram(&d3, &d4, &a)?;
    formats::write_atomic(&out.join("histogram_hbt.csv"), formats::histogram_csv(&h).as_bytes())?;
    let areas = integrate_peaks(&h, cfg.setup.rep_period, a.peak_window_ps)?;
    let report = HbtReport {
        emitter: index + 1,
        configured_residual: e.multiphoton_residual,
        purity: homsim_core::areas::coincidence_ratio(&areas)?,
        areas,
        seed: SeedRecord::new(cfg.simulation.seed),
        n_pulses: cfg.simulation.n_pulses,
    };
    formats::write_json(&out.join("hbt.json"), &report)?;
    Ok(report)
}
