use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homsim::config::RunConfig;
use homsim::core::fitting::{DecayModel, InstrumentShape};
use homsim::core::params::{DetectorParams, IrfShape};
use homsim::core::presets;
use homsim::formats::TagFormat;
use homsim::{pipeline, reproduce, CliError, Result};

#[derive(Parser)]
#[command(name = "homsim", version, about = "Two-photon interference simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory [default: config output.dir, else current directory]
    #[arg(long, env = "HOMSIM_OUT", global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate detector time tags with the Monte Carlo model
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        pulses: Option<u64>,
        #[arg(long, value_enum, default_value_t = TagFormat::Csv)]
        format: TagFormat,
        #[command(flatten)]
        common: Common,
    },
    /// Histogram tag files and compute Pc, P'c and A/B ratios
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Orthogonal-polarization tag files (one per detector)
        #[arg(long, num_args = 2, value_names = ["D3", "D4"])]
        perp: Option<Vec<PathBuf>>,
        /// Parallel-polarization tag files (one per detector)
        #[arg(long, num_args = 2, value_names = ["D3", "D4"])]
        par: Option<Vec<PathBuf>>,
        #[arg(long)]
        bin_width_ps: Option<u64>,
        /// Post-selection window around zero delay
        #[arg(long)]
        window_ps: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Analytic correlation curves before and after the detector response
    Curve {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit a Lorentzian line (GHz, counts) and report T2
    FitSpectrum {
        input: PathBuf,
        #[arg(long, default_value_t = presets::SPECTROMETER_FWHM_GHZ)]
        instrument_fwhm_ghz: f64,
        #[arg(long, value_enum, default_value_t = Instrument::Lorentzian)]
        instrument: Instrument,
        #[command(flatten)]
        common: Common,
    },
    /// Fit an IRF-convolved single or biexponential decay (ps, counts)
    FitDecay {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Model::SingleExp)]
        model: Model,
        /// Take the detector from a run configuration
        #[arg(long, conflicts_with_all = ["irf_fwhm_ps", "irf_shape"])]
        config: Option<PathBuf>,
        /// Single-detector response width
        #[arg(long, default_value_t = 640.0)]
        irf_fwhm_ps: f64,
        #[arg(long, value_enum, default_value_t = Shape::Gaussian)]
        irf_shape: Shape,
        #[command(flatten)]
        common: Common,
    },
    /// Single-source autocorrelation of one emitter
    Hbt {
        #[arg(long)]
        config: PathBuf,
        /// Emitter to measure
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        emitter: u8,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        bin_width_ps: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the full pipeline with the reported results
    ReproducePaper {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = reproduce::DEFAULT_PULSES)]
        pulses: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Instrument {
    Lorentzian,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    SingleExp,
    Biexp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Gaussian,
    TwoSidedExponential,
    Delta,
}

fn out_dir(common: &Common, cfg: Option<&RunConfig>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn pair(v: &Option<Vec<PathBuf>>) -> Option<[&Path; 2]> {
    v.as_ref().map(|v| [v[0].as_path(), v[1].as_path()])
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seed, pulses, format, common } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            if let Some(n) = pulses {
                cfg.simulation.n_pulses = n;
            }
            cfg.validate()?;
            let out = out_dir(&common, Some(&cfg));
            let s = pipeline::simulate(&cfg, &out, format)?;
            println!("{} pulses, {} + {} tags -> {}", s.counters.pulses, s.tags_d3, s.tags_d4, out.display());
        }
        Command::Analyze { config, perp, par, bin_width_ps, window_ps, common } => {
            let mut cfg = load(&config)?;
            if let Some(w) = bin_width_ps {
                cfg = cfg.with_bin_width(w);
            }
            if let Some(w) = window_ps {
                cfg = cfg.with_post_window(w);
            }
            cfg.validate()?;
            let out = out_dir(&common, Some(&cfg));
            let r = pipeline::analyze(pair(&perp), pair(&par), &cfg.analysis_settings(), cfg.setup.rep_period, &out)?;
            print_json(&r.metrics);
        }
        Command::Curve { config, common } => {
            let cfg = load(&config)?;
            let out = out_dir(&common, Some(&cfg));
            print_json(&pipeline::curve(&cfg, &out)?);
        }
        Command::FitSpectrum { input, instrument_fwhm_ghz, instrument, common } => {
            let shape = match instrument {
                Instrument::Lorentzian => InstrumentShape::Lorentzian,
                Instrument::Gaussian => InstrumentShape::Gaussian,
            };
            let r = pipeline::fit_spectrum(&input, instrument_fwhm_ghz, shape, &out_dir(&common, None))?;
            print_json(&r);
        }
        Command::FitDecay { input, model, config, irf_fwhm_ps, irf_shape, common } => {
            let cfg = config.as_deref().map(load).transpose()?;
            let detector = match &cfg {
                Some(c) => c.detector,
                None => {
                    let shape = match irf_shape {
                        Shape::Gaussian => IrfShape::Gaussian,
                        Shape::TwoSidedExponential => IrfShape::TwoSidedExponential,
                        Shape::Delta => IrfShape::Delta,
                    };
                    let fwhm = if shape == IrfShape::Delta { 0.0 } else { irf_fwhm_ps };
                    let d = DetectorParams { irf_fwhm: fwhm, irf_shape: shape, dark_rate: 0.0 };
                    d.validate().map_err(|e| CliError::Config(format!("detector: {e}")))?;
                    d
                }
            };
            let model = match model {
                Model::SingleExp => DecayModel::SingleExp,
                Model::Biexp => DecayModel::Biexp,
            };
            let r = pipeline::fit_decay_file(&input, model, &detector, &out_dir(&common, cfg.as_ref()))?;
            print_json(&r);
        }
        Command::Hbt { config, emitter, seed, bin_width_ps, common } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            if let Some(w) = bin_width_ps {
                cfg = cfg.with_bin_width(w);
            }
            cfg.validate()?;
            let r = pipeline::hbt(&cfg, emitter as usize - 1, &out_dir(&common, Some(&cfg)))?;
            println!(
                "emitter {}: g2(0) area ratio {:.4} ± {:.4} (configured residual {})",
                r.emitter, r.purity.value, r.purity.sigma, r.configured_residual
            );
        }
        Command::ReproducePaper { seed, pulses, common } => {
            let r = reproduce::reproduce_to(pulses, seed, &out_dir(&common, None))?;
            print!("{}", r.table());
            let failures = r.failures();
            if failures > 0 {
                return Err(CliError::Tolerance(failures));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("homsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
