//! Named evaluation scenarios and the report rows they produce.
//!
//! | scenario         | x-axis (`param`)        | what is measured                         |
//! |------------------|-------------------------|------------------------------------------|
//! | `fig5`           | input SNR target, dB    | SNR in/out on a long noisy tone          |
//! | `timing`         | number of signals       | wall time to enhance a batch             |
//! | `snr-vs-samples` | acquisitions averaged   | SNR after averaging and enhancement      |
//! | `ber`            | channel SNR, dB         | BPSK bit error rate after enhancement    |
//! | `gain`           | number of signals       | mean gain coefficient over the batch     |
//!
//! Output SNR and the gain coefficient are computed after compensating the
//! chain's group delay and applying the least-squares gain onto the clean
//! reference (see [`crate::metrics::align`]); the chain itself does not
//! preserve amplitude or polarity.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{align, ber, gain_coefficient, snr_db};
use crate::noise::{add_noise, random_bits, sigma_for_snr, NoiseSpec};
use crate::pipeline::{coherent_average, enhance, PipelineConfig};
use crate::signal::{Signal, DEFAULT_SAMPLE_RATE};
use crate::synth::{demodulate_bpsk, generate, whole_symbols, ModulationSpec};

/// Version of the report column layout below.
pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const REPORT_COLUMNS: [&str; 9] = [
    "scenario",
    "param",
    "seed",
    "snr_in_db",
    "snr_out_db",
    "ber",
    "gain_alpha",
    "wall_time_s",
    "config",
];

/// One row of an experiment CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: String,
    pub param: f64,
    pub seed: u64,
    pub snr_in_db: f64,
    pub snr_out_db: f64,
    /// Only for scenarios that carry bits.
    pub ber: Option<f64>,
    pub gain_alpha: f64,
    pub wall_time_s: f64,
    pub config: String,
}

/// Renders a metric; `+∞` becomes `inf`.
pub fn format_metric(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

impl EvalReport {
    pub fn record(&self) -> [String; 9] {
        [
            self.scenario.clone(),
            format!("{}", self.param),
            self.seed.to_string(),
            format_metric(self.snr_in_db),
            format_metric(self.snr_out_db),
            self.ber.map(format_metric).unwrap_or_default(),
            format_metric(self.gain_alpha),
            format!("{}", self.wall_time_s),
            self.config.clone(),
        ]
    }
}

/// Writes `reports` with the fixed header.
pub fn write_reports_csv<W: Write>(reports: &[EvalReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_COLUMNS)?;
    for r in reports {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    Fig5,
    Timing,
    SnrVsSamples,
    Ber,
    Gain,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Fig5,
        Scenario::Timing,
        Scenario::SnrVsSamples,
        Scenario::Ber,
        Scenario::Gain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig5 => "fig5",
            Scenario::Timing => "timing",
            Scenario::SnrVsSamples => "snr-vs-samples",
            Scenario::Ber => "ber",
            Scenario::Gain => "gain",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::UnknownScenario {
                name: name.to_string(),
                known: Self::ALL.map(Scenario::name).join(", "),
            })
    }

    /// Default x-axis grid.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Scenario::Fig5 => vec![FIG5_INPUT_SNR_DB],
            Scenario::Timing => (0..9).map(|i| 1000.0 + 500.0 * i as f64).collect(),
            Scenario::SnrVsSamples => vec![10.0, 20.0, 30.0, 40.0, 50.0],
            Scenario::Ber => vec![-5.0, 0.0, 5.0, 10.0],
            Scenario::Gain => vec![10.0, 20.0, 50.0, 100.0],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Input SNR of the long-tone scenario, dB.
pub const FIG5_INPUT_SNR_DB: f64 = 1.121;
pub const FIG5_SAMPLES: usize = 60_000;
pub const FIG5_CARRIER_HZ: f64 = 1000.0;
/// Share of the fig5 noise power carried by impulses.
pub const FIG5_IMPULSE_SHARE: f64 = 0.05;
pub const FIG5_IMPULSE_PROB: f64 = 0.002;

/// Length of each signal in the timing and gain batches.
pub const BATCH_SIGNAL_LEN: usize = 1024;
/// Per-signal input SNR of the timing and gain batches, dB.
pub const BATCH_INPUT_SNR_DB: f64 = FIG5_INPUT_SNR_DB;

/// Per-acquisition input SNR for the averaging scenario, dB.
pub const AVERAGING_INPUT_SNR_DB: f64 = -15.0;
pub const AVERAGING_SAMPLES: usize = 8192;

pub const BER_CARRIER_HZ: f64 = 1000.0;
pub const BER_SYMBOL_RATE: f64 = 500.0;
pub const BER_BITS: usize = 2000;

pub const DEFAULT_TIMING_REPEATS: usize = 3;

/// Knobs shared by all scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOptions {
    pub pipeline: PipelineConfig,
    pub grid: Option<Vec<f64>>,
    pub sample_rate: f64,
    /// Timed batches are enhanced this many times; the fastest run is kept.
    pub timing_repeats: usize,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            grid: None,
            sample_rate: DEFAULT_SAMPLE_RATE,
            timing_repeats: DEFAULT_TIMING_REPEATS,
        }
    }
}

/// Noise for a tone of `signal_power` at `snr_db`, with `impulse_share` of
/// the noise power in Bernoulli impulses of rate `impulse_prob`.
pub fn mixed_noise(
    signal_power: f64,
    snr_db: f64,
    impulse_share: f64,
    impulse_prob: f64,
    seed: u64,
) -> NoiseSpec {
    let total = sigma_for_snr(signal_power, snr_db).powi(2);
    let impulse_power = total * impulse_share;
    let impulse_sigma = if impulse_prob > 0.0 {
        (impulse_power / impulse_prob).sqrt()
    } else {
        0.0
    };
    NoiseSpec::gaussian((total - impulse_power).sqrt(), seed).with_impulses(impulse_prob, impulse_sigma)
}

/// Clean tone and its noisy observation for the fig5 scenario.
pub fn fig5_signals(seed: u64, snr_db: f64, sample_rate: f64) -> Result<(Signal, Signal)> {
    let duration = FIG5_SAMPLES as f64 / sample_rate;
    let clean = generate(&ModulationSpec::sine(FIG5_CARRIER_HZ), sample_rate, duration)?;
    let noise = mixed_noise(
        clean.mean_power(),
        snr_db,
        FIG5_IMPULSE_SHARE,
        FIG5_IMPULSE_PROB,
        seed,
    );
    let noisy = add_noise(&clean, &noise)?;
    Ok((clean, noisy))
}

/// Output SNR and gain coefficient of `enhanced` against `clean`.
pub fn output_metrics(clean: &Signal, enhanced: &Signal, cfg: &PipelineConfig) -> Result<(f64, f64)> {
    let a = align(clean, enhanced, cfg.group_delay())?;
    Ok((
        snr_db(&a.reference, &a.estimate)?,
        gain_coefficient(&a.reference, &a.estimate)?,
    ))
}

fn timed_enhance(y: &Signal, cfg: &PipelineConfig) -> Result<(Signal, f64)> {
    let start = Instant::now();
    let out = enhance(y, cfg)?;
    Ok((out, start.elapsed().as_secs_f64()))
}

fn derive_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(index)
}

fn fig5(seed: u64, snr_target: f64, opts: &ScenarioOptions) -> Result<EvalReport> {
    let (clean, noisy) = fig5_signals(seed, snr_target, opts.sample_rate)?;
    let (enhanced, wall) = timed_enhance(&noisy, &opts.pipeline)?;
    let (snr_out, alpha) = output_metrics(&clean, &enhanced, &opts.pipeline)?;
    Ok(EvalReport {
        scenario: Scenario::Fig5.name().into(),
        param: snr_target,
        seed,
        snr_in_db: snr_db(&clean, &noisy)?,
        snr_out_db: snr_out,
        ber: None,
        gain_alpha: alpha,
        wall_time_s: wall,
        config: opts.pipeline.to_string(),
    })
}

/// A batch of short noisy tones with their clean references.
pub fn tone_batch(count: usize, seed: u64, sample_rate: f64) -> Result<Vec<(Signal, Signal)>> {
    let duration = BATCH_SIGNAL_LEN as f64 / sample_rate;
    let clean = generate(&ModulationSpec::sine(FIG5_CARRIER_HZ), sample_rate, duration)?;
    let power = clean.mean_power();
    (0..count as u64)
        .map(|i| {
            let noise = mixed_noise(
                power,
                BATCH_INPUT_SNR_DB,
                FIG5_IMPULSE_SHARE,
                FIG5_IMPULSE_PROB,
                derive_seed(seed, i),
            );
            Ok((clean.clone(), add_noise(&clean, &noise)?))
        })
        .collect()
}

/// Enhances a whole batch and returns the outputs and the elapsed time.
pub fn time_batch(noisy: &[Signal], cfg: &PipelineConfig) -> Result<(Vec<Signal>, f64)> {
    let start = Instant::now();
    let out = noisy
        .par_iter()
        .map(|y| enhance(y, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

fn batch(scenario: Scenario, seed: u64, count: usize, opts: &ScenarioOptions) -> Result<EvalReport> {
    let pairs = tone_batch(count, seed, opts.sample_rate)?;
    let noisy: Vec<Signal> = pairs.iter().map(|(_, y)| y.clone()).collect();
    let (enhanced, mut wall) = time_batch(&noisy, &opts.pipeline)?;
    if scenario == Scenario::Timing {
        for _ in 1..opts.timing_repeats {
            wall = wall.min(time_batch(&noisy, &opts.pipeline)?.1);
        }
    }
    let (mut snr_in, mut snr_out, mut alpha) = (0.0, 0.0, 0.0);
    for ((clean, y), e) in pairs.iter().zip(&enhanced) {
        let (s, a) = output_metrics(clean, e, &opts.pipeline)?;
        snr_in += snr_db(clean, y)?;
        snr_out += s;
        alpha += a;
    }
    let k = count as f64;
    Ok(EvalReport {
        scenario: scenario.name().into(),
        param: count as f64,
        seed,
        snr_in_db: snr_in / k,
        snr_out_db: snr_out / k,
        ber: None,
        gain_alpha: alpha / k,
        wall_time_s: wall,
        config: opts.pipeline.to_string(),
    })
}

fn snr_vs_samples(seed: u64, acquisitions: usize, opts: &ScenarioOptions) -> Result<EvalReport> {
    let fs = opts.sample_rate;
    let clean = generate(
        &ModulationSpec::sine(FIG5_CARRIER_HZ),
        fs,
        AVERAGING_SAMPLES as f64 / fs,
    )?;
    let sigma = sigma_for_snr(clean.mean_power(), AVERAGING_INPUT_SNR_DB);
    let copies = (0..acquisitions as u64)
        .map(|i| add_noise(&clean, &NoiseSpec::gaussian(sigma, derive_seed(seed, i))))
        .collect::<Result<Vec<_>>>()?;
    let averaged = coherent_average(&copies)?;
    let (enhanced, wall) = timed_enhance(&averaged, &opts.pipeline)?;
    let (snr_out, alpha) = output_metrics(&clean, &enhanced, &opts.pipeline)?;
    Ok(EvalReport {
        scenario: Scenario::SnrVsSamples.name().into(),
        param: acquisitions as f64,
        seed,
        snr_in_db: snr_db(&clean, &averaged)?,
        snr_out_db: snr_out,
        ber: None,
        gain_alpha: alpha,
        wall_time_s: wall,
        config: opts.pipeline.to_string(),
    })
}

/// BPSK over AWGN at `channel_snr_db`, enhanced and coherently demodulated.
pub fn ber_trial(seed: u64, channel_snr_db: f64, opts: &ScenarioOptions) -> Result<EvalReport> {
    let fs = opts.sample_rate;
    let bits = random_bits(BER_BITS, seed);
    let spec = ModulationSpec::bpsk(BER_CARRIER_HZ, BER_SYMBOL_RATE, bits.clone());
    let duration = BER_BITS as f64 / BER_SYMBOL_RATE;
    let clean = generate(&spec, fs, duration)?;
    let sigma = sigma_for_snr(clean.mean_power(), channel_snr_db);
    let noisy = add_noise(&clean, &NoiseSpec::gaussian(sigma, seed))?;
    let (enhanced, wall) = timed_enhance(&noisy, &opts.pipeline)?;
    let delay = opts.pipeline.group_delay();
    let aligned = align(&clean, &enhanced, delay)?;
    // The chain's polarity is resolved against the reference, as a pilot would.
    let decided = demodulate_bpsk(&enhanced, &spec, BER_BITS, delay, aligned.gain)?;
    let expected = whole_symbols(clean.len() - delay, BER_SYMBOL_RATE, fs);
    debug_assert_eq!(decided.len(), expected.min(BER_BITS));
    Ok(EvalReport {
        scenario: Scenario::Ber.name().into(),
        param: channel_snr_db,
        seed,
        snr_in_db: snr_db(&clean, &noisy)?,
        snr_out_db: snr_db(&aligned.reference, &aligned.estimate)?,
        ber: Some(ber(&bits[..decided.len()], &decided)?),
        gain_alpha: gain_coefficient(&aligned.reference, &aligned.estimate)?,
        wall_time_s: wall,
        config: opts.pipeline.to_string(),
    })
}

fn run_point(scenario: Scenario, seed: u64, x: f64, opts: &ScenarioOptions) -> Result<EvalReport> {
    let as_count = |x: f64| -> Result<usize> {
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(Error::invalid(format!("{scenario} grid values must be positive integers, got {x}")))
        }
    };
    match scenario {
        Scenario::Fig5 => fig5(seed, x, opts),
        Scenario::Timing | Scenario::Gain => batch(scenario, seed, as_count(x)?, opts),
        Scenario::SnrVsSamples => snr_vs_samples(seed, as_count(x)?, opts),
        Scenario::Ber => ber_trial(seed, x, opts),
    }
}

/// Runs `scenario` over its grid for every seed. Rows are ordered by grid
/// point, then by seed. Timing rows run one after another so that batches do
/// not compete for cores; the others run in parallel.
pub fn run_scenario(scenario: Scenario, seeds: &[u64], opts: &ScenarioOptions) -> Result<Vec<EvalReport>> {
    opts.pipeline.validate()?;
    if opts.timing_repeats == 0 {
        return Err(Error::invalid("timing repeats must be >= 1"));
    }
    if seeds.is_empty() {
        return Err(Error::invalid("at least one seed is required"));
    }
    let grid = opts.grid.clone().unwrap_or_else(|| scenario.default_grid());
    let points: Vec<(f64, u64)> = grid
        .iter()
        .flat_map(|&x| seeds.iter().map(move |&s| (x, s)))
        .collect();
    if scenario == Scenario::Timing {
        points
            .iter()
            .map(|&(x, s)| run_point(scenario, s, x, opts))
            .collect()
    } else {
        points
            .par_iter()
            .map(|&(x, s)| run_point(scenario, s, x, opts))
            .collect()
    }
}

/// Runs a registered scenario by name with default options.
pub fn run_experiment(name: &str, seeds: &[u64]) -> Result<Vec<EvalReport>> {
    run_scenario(Scenario::from_name(name)?, seeds, &ScenarioOptions::default())
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn linear_fit_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy * sxy / (sxx * syy)
}
