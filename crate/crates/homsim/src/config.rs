//! JSON run configuration. Units are fixed by field suffix (`_ps`, `_ghz`).

use std::path::{Path, PathBuf};

use homsim_core::montecarlo::{InterferenceEnvelope, SimConfig};
use homsim_core::params::{DetectorParams, EmitterParams, SetupParams};
use homsim_core::TauGrid;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub emitters: [EmitterParams; 2],
    pub setup: SetupParams,
    pub detector: DetectorParams,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub curve: CurveSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_pulses: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub envelope: InterferenceEnvelope,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection { n_pulses: 1_000_000, seed: 0, envelope: InterferenceEnvelope::PromptOnly }
    }
}

/// Histogram and integration settings. Unset windows default to one
/// repetition period (peak areas) and one bin (post-selection).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width_ps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tau_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_window_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_window_ps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_ps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_side_peaks: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Resolved analysis settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisSettings {
    pub bin_width_ps: u64,
    pub max_tau_ps: f64,
    pub peak_window_ps: f64,
    pub post_window_ps: f64,
}

pub const DEFAULT_SIDE_PEAKS: usize = 3;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |what: &'static str| move |e: homsim_core::Error| CliError::Config(format!("{what}: {e}"));
        self.emitters[0].validate().map_err(ctx("emitters[0]"))?;
        self.emitters[1].validate().map_err(ctx("emitters[1]"))?;
        self.setup.validate().map_err(ctx("setup"))?;
        self.detector.validate().map_err(ctx("detector"))?;
        self.sim_config().validate().map_err(ctx("simulation"))?;
        let a = self.analysis_settings();
        if a.bin_width_ps == 0 {
            return Err(CliError::Config("analysis.bin_width_ps: must be at least 1".into()));
        }
        let t = self.setup.rep_period;
        if !(a.peak_window_ps > 0.0 && a.peak_window_ps <= t) {
            return Err(CliError::Config("analysis.peak_window_ps: must lie in (0, rep_period_ps]".into()));
        }
        if !(a.post_window_ps >= a.bin_width_ps as f64) {
            return Err(CliError::Config("analysis.post_window_ps: must be at least one bin".into()));
        }
        if !(a.max_tau_ps >= 2.0 * t + 0.5 * a.peak_window_ps) {
            return Err(CliError::Config("analysis.max_tau_ps: must cover two side peaks per side".into()));
        }
        if let Some(h) = self.curve.spacing_ps {
            if !(h > 0.0) {
                return Err(CliError::Config("curve.spacing_ps: must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        let [e1, e2] = self.emitters;
        let mut c = SimConfig::new(e1, e2, self.setup, self.detector, self.simulation.n_pulses, self.simulation.seed);
        c.envelope = self.simulation.envelope;
        c
    }

    pub fn analysis_settings(&self) -> AnalysisSettings {
        let t = self.setup.rep_period;
        let bw = self.analysis.bin_width_ps.unwrap_or(homsim_core::analysis::DEFAULT_BIN_WIDTH);
        let window = self.analysis.peak_window_ps.unwrap_or(t);
        AnalysisSettings {
            bin_width_ps: bw,
            max_tau_ps: self.analysis.max_tau_ps.unwrap_or((DEFAULT_SIDE_PEAKS as f64 + 0.5) * t),
            peak_window_ps: window,
            post_window_ps: self.analysis.post_window_ps.unwrap_or(bw as f64),
        }
    }

    /// Curve grid: fine enough for both the coherence dip and the detector
    /// kernel, wide enough for the requested side peaks.
    pub fn curve_grid(&self) -> Result<(TauGrid, usize)> {
        let n_side = self.curve.n_side_peaks.unwrap_or(DEFAULT_SIDE_PEAKS);
        let t2_min = self.emitters[0].t2.min(self.emitters[1].t2);
        let mut spacing = t2_min / 10.0;
        if !self.detector.is_delta() {
            spacing = spacing.min(self.detector.irf_fwhm / 8.0);
        }
        let spacing = self.curve.spacing_ps.unwrap_or(spacing);
        let half = (n_side as f64 + 0.5) * self.setup.rep_period;
        Ok((TauGrid::new(half, spacing)?, n_side))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.simulation.seed = seed;
        self
    }

    pub fn with_detector(mut self, d: DetectorParams) -> Self {
        self.detector = d;
        self
    }

    pub fn with_bin_width(mut self, w: u64) -> Self {
        self.analysis.bin_width_ps = Some(w);
        self
    }

    pub fn with_post_window(mut self, w: f64) -> Self {
        self.analysis.post_window_ps = Some(w);
        self
    }
}
