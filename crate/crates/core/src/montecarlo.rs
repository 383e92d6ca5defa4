//! Pulse-by-pulse photon simulation producing detector time tags.
//!
//! Each laser pulse may yield a primary photon per emitter (probability =
//! efficiency) and an extra independent photon modelling the multi-photon
//! residual. When both primary photons meet with parallel polarization their
//! routing is drawn jointly from the two-photon coincidence probability at
//! the sampled emission times and detunings; everything else routes 50/50.
//! Pure dephasing is represented by a static Lorentzian detuning per photon.
//!
//! Pulses are grouped into fixed-size batches, each with its own ChaCha
//! stream derived from `(seed, batch index)`, so results do not depend on how
//! batches are scheduled.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::math;
use crate::params::{DetectorParams, EmitterParams, IrfShape, Polarization, SetupParams};
use crate::{Error, Result};

/// Pulses per RNG substream.
pub const BATCH_PULSES: u64 = 8192;

pub const GENERATOR_NAME: &str = "ChaCha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    D3,
    D4,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::D3 => "D3",
            Channel::D4 => "D4",
        }
    }

    pub fn number(self) -> u16 {
        match self {
            Channel::D3 => 3,
            Channel::D4 => 4,
        }
    }

    pub fn from_number(n: u16) -> Option<Self> {
        match n {
            3 => Some(Channel::D3),
            4 => Some(Channel::D4),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "D3" | "d3" | "3" => Some(Channel::D3),
            "D4" | "d4" | "4" => Some(Channel::D4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub generator: String,
    pub master_seed: u64,
}

impl SeedRecord {
    pub fn new(master_seed: u64) -> Self {
        SeedRecord { generator: GENERATOR_NAME.to_string(), master_seed }
    }
}

/// Click record of one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTagStream {
    pub channel: Channel,
    /// Strictly increasing timestamps in ps.
    pub tags: Vec<u64>,
    /// Simulated span in ps; all tags lie in `[0, duration]`.
    pub duration: u64,
    pub seed: Option<SeedRecord>,
}

impl TimeTagStream {
    pub fn new(channel: Channel, tags: Vec<u64>, duration: u64) -> Result<Self> {
        let s = TimeTagStream { channel, tags, duration, seed: None };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.tags.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Unsorted { index: i + 1 });
        }
        if self.tags.last().is_some_and(|&t| t > self.duration) {
            return Err(Error::invalid("tags", "timestamp beyond stream duration"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Route {
    D3,
    D4,
    #[default]
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Photon {
    /// 0 or 1.
    pub emitter: u8,
    /// Extra photon from the multi-photon residual.
    pub extra: bool,
    /// Emitted through the slow dark-state channel.
    pub slow: bool,
    /// ps after the pulse epoch.
    pub emission_time: f64,
    /// rad/ps.
    pub detuning: f64,
    pub route: Route,
    /// Emission time plus detector jitter, ps after the pulse epoch.
    pub detection_time: f64,
}

/// What happened in one laser pulse. Holds up to four photons.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PulsePairOutcome {
    /// Whether each emitter delivered its primary photon.
    pub emitted: [bool; 2],
    photons: [Photon; 4],
    len: u8,
}

impl PulsePairOutcome {
    pub fn photons(&self) -> &[Photon] {
        &self.photons[..self.len as usize]
    }

    fn push(&mut self, p: Photon) {
        self.photons[self.len as usize] = p;
        self.len += 1;
    }
}

/// Envelope used in the interference visibility of a sampled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceEnvelope {
    /// Only two prompt photons interfere, with single-exponential envelopes.
    /// Matches the analytic correlation model.
    #[default]
    PromptOnly,
    /// Every primary pair interferes using the full biexponential densities.
    FullMixture,
}

/// Emission delay after the pulse, with the dark-state channel flag.
pub fn sample_emission<R: Rng + ?Sized>(e: &EmitterParams, rng: &mut R) -> (f64, bool) {
    if let Some(ds) = e.dark_state {
        if ds.slow_fraction > 0.0 && rng.random::<f64>() < ds.slow_fraction {
            let t = Exp::new(1.0 / ds.slow_lifetime).expect("validated lifetime").sample(rng);
            return (t, true);
        }
    }
    let t = Exp::new(e.decay_rate()).expect("validated lifetime").sample(rng);
    (t, false)
}

pub fn sample_emission_time<R: Rng + ?Sized>(e: &EmitterParams, rng: &mut R) -> f64 {
    sample_emission(e, rng).0
}

/// Static detuning drawn from a Lorentzian of HWHM γ* about `e.detuning`.
pub fn sample_detuning<R: Rng + ?Sized>(e: &EmitterParams, rng: &mut R) -> f64 {
    let g = 1.0 / e.t2 - 0.5 / e.t1;
    if g <= 0.0 {
        return e.detuning;
    }
    Cauchy::new(e.detuning, g).expect("positive width").sample(rng)
}

/// Single-detector timing jitter.
pub fn sample_jitter<R: Rng + ?Sized>(d: &DetectorParams, rng: &mut R) -> f64 {
    let scale = d.single_scale();
    match d.irf_shape {
        IrfShape::Delta => 0.0,
        IrfShape::Gaussian => Normal::new(0.0, scale).expect("finite sigma").sample(rng),
        IrfShape::TwoSidedExponential => {
            let m = Exp::new(1.0 / scale).expect("positive scale").sample(rng);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        }
    }
}

fn envelope_density(e: &EmitterParams, t: f64, mixture: bool) -> f64 {
    let g = e.decay_rate();
    match e.dark_state {
        Some(ds) if mixture && ds.slow_fraction > 0.0 => {
            let gs = 1.0 / ds.slow_lifetime;
            (1.0 - ds.slow_fraction) * g * math::exp(-g * t) + ds.slow_fraction * gs * math::exp(-gs * t)
        }
        _ => g * math::exp(-g * t),
    }
}

/// Two-photon interference visibility for photon `a` from emitter 1 and `b`
/// from emitter 2.
fn pair_visibility(e1: &EmitterParams, e2: &EmitterParams, setup: &SetupParams, a: &Photon, b: &Photon, envelope: InterferenceEnvelope) -> f64 {
    let (ta, tb) = (a.emission_time, b.emission_time);
    let overlap = match envelope {
        InterferenceEnvelope::PromptOnly => {
            if a.slow || b.slow {
                return 0.0;
            }
            // 2√(AB)/(A+B) = sech(½ ln(A/B)) for exponential envelopes
            let x = 0.5 * (e2.decay_rate() - e1.decay_rate()) * (ta - tb);
            let ex = math::exp(-math::abs(x));
            2.0 * ex / (1.0 + ex * ex)
        }
        InterferenceEnvelope::FullMixture => {
            let p1a = envelope_density(e1, ta, true);
            let p2b = envelope_density(e2, tb, true);
            let p2a = envelope_density(e2, ta, true);
            let p1b = envelope_density(e1, tb, true);
            let s = p1a * p2b + p2a * p1b;
            if s <= 0.0 {
                return 0.0;
            }
            2.0 * math::sqrt(p1a * p2b * p2a * p1b) / s
        }
    };
    setup.visibility() * overlap * math::cos((a.detuning - b.detuning) * (tb - ta))
}

fn coin<R: Rng + ?Sized>(rng: &mut R) -> Route {
    if rng.random::<bool>() {
        Route::D3
    } else {
        Route::D4
    }
}

/// Simulates one pulse: emission, routing at the beamsplitter and detector
/// jitter. Times are relative to the pulse epoch. Dark counts are not part
/// of a pulse.
pub fn simulate_pulse<R: Rng + ?Sized>(
    e1: &EmitterParams,
    e2: &EmitterParams,
    setup: &SetupParams,
    d: &DetectorParams,
    rng: &mut R,
) -> PulsePairOutcome {
    simulate_pulse_with(e1, e2, setup, d, InterferenceEnvelope::PromptOnly, rng)
}

pub fn simulate_pulse_with<R: Rng + ?Sized>(
    e1: &EmitterParams,
    e2: &EmitterParams,
    setup: &SetupParams,
    d: &DetectorParams,
    envelope: InterferenceEnvelope,
    rng: &mut R,
) -> PulsePairOutcome {
    let mut out = PulsePairOutcome::default();
    let emitters = [e1, e2];
    let mut primary: [Option<usize>; 2] = [None, None];
    for (i, e) in emitters.iter().enumerate() {
        if rng.random::<f64>() < e.efficiency {
            let (t, slow) = sample_emission(e, rng);
            let detuning = sample_detuning(e, rng);
            primary[i] = Some(out.len as usize);
            out.emitted[i] = true;
            out.push(Photon { emitter: i as u8, extra: false, slow, emission_time: t, detuning, ..Photon::default() });
        }
        let q = e.extra_photon_probability();
        if q > 0.0 && rng.random::<f64>() < e.efficiency * q {
            let (t, slow) = sample_emission(e, rng);
            let detuning = sample_detuning(e, rng);
            out.push(Photon { emitter: i as u8, extra: true, slow, emission_time: t, detuning, ..Photon::default() });
        }
    }

    let joint = match (primary, setup.polarization) {
        ([Some(a), Some(b)], Polarization::Parallel) => Some((a, b)),
        _ => None,
    };
    if let Some((a, b)) = joint {
        let v = pair_visibility(e1, e2, setup, &out.photons[a], &out.photons[b], envelope);
        let p_split = 0.5 * (1.0 - v);
        let (ra, rb) = if rng.random::<f64>() < p_split {
            if rng.random::<bool>() {
                (Route::D3, Route::D4)
            } else {
                (Route::D4, Route::D3)
            }
        } else {
            let r = coin(rng);
            (r, r)
        };
        out.photons[a].route = ra;
        out.photons[b].route = rb;
    }
    for k in 0..out.len as usize {
        if joint.is_some_and(|(a, b)| k == a || k == b) {
            continue;
        }
        out.photons[k].route = coin(rng);
    }
    for k in 0..out.len as usize {
        let p = &mut out.photons[k];
        p.detection_time = p.emission_time + sample_jitter(d, rng);
    }
    out
}

/// Full simulation request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub emitters: [EmitterParams; 2],
    pub setup: SetupParams,
    pub detector: DetectorParams,
    pub n_pulses: u64,
    pub seed: u64,
    #[serde(default)]
    pub envelope: InterferenceEnvelope,
}

impl SimConfig {
    pub fn new(e1: EmitterParams, e2: EmitterParams, setup: SetupParams, detector: DetectorParams, n_pulses: u64, seed: u64) -> Self {
        SimConfig { emitters: [e1, e2], setup, detector, n_pulses, seed, envelope: InterferenceEnvelope::PromptOnly }
    }

    pub fn validate(&self) -> Result<()> {
        self.emitters[0].validate()?;
        self.emitters[1].validate()?;
        self.setup.validate()?;
        self.detector.validate()?;
        if self.n_pulses == 0 {
            return Err(Error::invalid("n_pulses", "must be at least 1"));
        }
        self.duration()?;
        Ok(())
    }

    /// Epoch offset of pulse 0 so early jitter stays non-negative.
    pub fn epoch_offset(&self) -> f64 {
        0.25 * self.setup.rep_period
    }

    pub fn duration(&self) -> Result<u64> {
        let d = self.n_pulses as f64 * self.setup.rep_period;
        // keep headroom below 2^63 so differences fit in i64
        if !(d.is_finite() && d < 9.0e18) {
            return Err(Error::TimestampOverflow);
        }
        Ok(math::ceil(d) as u64)
    }

    pub fn n_batches(&self) -> u64 {
        self.n_pulses.div_ceil(BATCH_PULSES)
    }
}

/// Photon bookkeeping for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimCounters {
    pub pulses: u64,
    pub photons_emitted: u64,
    pub photons_tagged: u64,
    /// Photons whose detection time fell outside `[0, duration]`.
    pub out_of_range: u64,
    /// Clicks that coincided with an existing tag on the same channel at
    /// 1 ps resolution.
    pub duplicates: u64,
    pub dark_counts: u64,
    /// Pulses in which both primary photons were present.
    pub both_primary: u64,
    /// Of those, pulses in which they left through different ports.
    pub both_primary_split: u64,
}

impl SimCounters {
    pub fn merge(&mut self, o: &SimCounters) {
        self.pulses += o.pulses;
        self.photons_emitted += o.photons_emitted;
        self.photons_tagged += o.photons_tagged;
        self.out_of_range += o.out_of_range;
        self.duplicates += o.duplicates;
        self.dark_counts += o.dark_counts;
        self.both_primary += o.both_primary;
        self.both_primary_split += o.both_primary_split;
    }
}

/// Unsorted tags of one batch.
#[derive(Debug, Clone, Default)]
pub struct BatchOutput {
    pub d3: Vec<u64>,
    pub d4: Vec<u64>,
    pub counters: SimCounters,
}

pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// Simulates pulses `batch*BATCH_PULSES ..` of the run, plus the dark counts
/// falling in that batch's time slice.
pub fn simulate_batch(cfg: &SimConfig, batch: u64) -> BatchOutput {
    let mut rng = batch_rng(cfg.seed, batch);
    let first = batch * BATCH_PULSES;
    let last = (first + BATCH_PULSES).min(cfg.n_pulses);
    let period = cfg.setup.rep_period;
    let offset = cfg.epoch_offset();
    let duration = cfg.duration().unwrap_or(u64::MAX) as f64;
    let [e1, e2] = &cfg.emitters;
    let mut out = BatchOutput::default();
    out.counters.pulses = last.saturating_sub(first);
    for k in first..last {
        let epoch = offset + k as f64 * period;
        let pulse = simulate_pulse_with(e1, e2, &cfg.setup, &cfg.detector, cfg.envelope, &mut rng);
        out.counters.photons_emitted += pulse.photons().len() as u64;
        if pulse.emitted == [true, true] {
            out.counters.both_primary += 1;
            let mut routes = pulse.photons().iter().filter(|p| !p.extra).map(|p| p.route);
            if routes.next() != routes.next() {
                out.counters.both_primary_split += 1;
            }
        }
        for p in pulse.photons() {
            let t = epoch + p.detection_time;
            if !(0.0..=duration).contains(&t) {
                out.counters.out_of_range += 1;
                continue;
            }
            let tag = math::round(t) as u64;
            match p.route {
                Route::D3 => out.d3.push(tag),
                Route::D4 => out.d4.push(tag),
                Route::Lost => continue,
            }
            out.counters.photons_tagged += 1;
        }
    }
    let rate = cfg.detector.dark_rate;
    if rate > 0.0 && last > first {
        // Batch b owns the time slice [b*S*T, (b+1)*S*T), clipped to duration.
        let lo = first as f64 * period;
        let hi = if last == cfg.n_pulses { duration } else { last as f64 * period };
        let span = hi - lo;
        for buf in [&mut out.d3, &mut out.d4] {
            let n = Poisson::new(rate * span).map(|p| p.sample(&mut rng) as u64).unwrap_or(0);
            for _ in 0..n {
                let t = lo + rng.random::<f64>() * span;
                buf.push((math::round(t) as u64).min(duration as u64));
            }
            out.counters.dark_counts += n;
        }
    }
    out
}

fn finish(mut tags: Vec<u64>, counters: &mut SimCounters) -> Vec<u64> {
    tags.sort_unstable();
    let before = tags.len();
    tags.dedup();
    counters.duplicates += (before - tags.len()) as u64;
    tags
}

/// Merges batch outputs (in any order) into two sorted streams.
pub fn merge_batches<I: IntoIterator<Item = BatchOutput>>(cfg: &SimConfig, batches: I) -> Result<(TimeTagStream, TimeTagStream, SimCounters)> {
    let duration = cfg.duration()?;
    let mut counters = SimCounters::default();
    let mut d3 = Vec::new();
    let mut d4 = Vec::new();
    for b in batches {
        counters.merge(&b.counters);
        d3.extend_from_slice(&b.d3);
        d4.extend_from_slice(&b.d4);
    }
    let d3 = finish(d3, &mut counters);
    let d4 = finish(d4, &mut counters);
    let seed = Some(SeedRecord::new(cfg.seed));
    Ok((
        TimeTagStream { channel: Channel::D3, tags: d3, duration, seed: seed.clone() },
        TimeTagStream { channel: Channel::D4, tags: d4, duration, seed },
        counters,
    ))
}

/// Sequential driver; the `homsim` crate provides a parallel one with
/// identical output.
pub fn generate_streams_with_counters(cfg: &SimConfig) -> Result<(TimeTagStream, TimeTagStream, SimCounters)> {
    cfg.validate()?;
    merge_batches(cfg, (0..cfg.n_batches()).map(|b| simulate_batch(cfg, b)))
}

pub fn generate_streams(
    n_pulses: u64,
    e1: &EmitterParams,
    e2: &EmitterParams,
    setup: &SetupParams,
    d: &DetectorParams,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream)> {
    let cfg = SimConfig::new(*e1, *e2, *setup, *d, n_pulses, seed);
    generate_streams_with_counters(&cfg).map(|(a, b, _)| (a, b))
}

/// Configuration for a single-source autocorrelation run: the second input
/// of the beamsplitter is dark.
pub fn hbt_config(e: &EmitterParams, rep_period: f64, d: &DetectorParams, n_pulses: u64, seed: u64) -> SimConfig {
    let dark = EmitterParams { efficiency: 0.0, multiphoton_residual: 0.0, ..*e };
    let setup = SetupParams::new(0.0, Polarization::Orthogonal, rep_period);
    SimConfig::new(*e, dark, setup, *d, n_pulses, seed)
}

/// Histogram of emission time plus single-detector jitter, the raw data of
/// a lifetime measurement. Bin `i` covers `[t_min + i w, t_min + (i+1) w)`.
pub fn simulate_decay_histogram(
    e: &EmitterParams,
    d: &DetectorParams,
    n_events: u64,
    seed: u64,
    t_min: f64,
    bin_width: f64,
    n_bins: usize,
) -> Result<Vec<u64>> {
    e.validate()?;
    d.validate()?;
    if !(bin_width > 0.0) || n_bins == 0 {
        return Err(Error::invalid("bin_width", "must be positive with at least one bin"));
    }
    let mut counts = alloc::vec![0u64; n_bins];
    let n_batches = n_events.div_ceil(BATCH_PULSES);
    for b in 0..n_batches {
        let mut rng = batch_rng(seed, b);
        let m = (n_events - b * BATCH_PULSES).min(BATCH_PULSES);
        for _ in 0..m {
            let t = sample_emission_time(e, &mut rng) + sample_jitter(d, &mut rng);
            let x = (t - t_min) / bin_width;
            if x >= 0.0 && x < n_bins as f64 {
                counts[x as usize] += 1;
            }
        }
    }
    Ok(counts)
}
