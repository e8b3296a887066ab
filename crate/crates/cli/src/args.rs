use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sigenhance::bsr::BsrSystem;
use sigenhance::inp::InpConfig;
use sigenhance::nlm::NlmConfig;
use sigenhance::synth::Scheme;
use sigenhance::PipelineConfig;

use crate::Failure;

const AFTER_HELP: &str = "\
Configuration precedence: command-line flags > --config file > built-in defaults.
A config file holds one `key = value` per line, where key is a long flag name
of the subcommand (`nlm-patch = 4`, `no-fir = true`); `#` starts a comment.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.";

#[derive(Debug, Parser)]
#[command(name = "sigenhance", version, about = "Weak-signal enhancement toolkit", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Synthesize a (noisy) test signal
    #[command(after_help = AFTER_HELP, args_override_self = true)]
    Generate(GenerateArgs),
    /// Run the enhancement chain over one or more signal files
    #[command(after_help = AFTER_HELP, args_override_self = true)]
    Enhance(EnhanceArgs),
    /// Print the signal probability of each input file
    #[command(after_help = AFTER_HELP, args_override_self = true)]
    Detect(DetectArgs),
    /// Run a named evaluation scenario and write its report CSV
    #[command(after_help = AFTER_HELP, args_override_self = true)]
    Eval(EvalArgs),
    /// Time the enhancement chain over batches of signals
    #[command(after_help = AFTER_HELP, args_override_self = true)]
    Bench(BenchArgs),
    /// Build a stochastic-resonance paired dataset
    #[command(after_help = AFTER_HELP, args_override_self = true)]
    Dataset(DatasetArgs),
    /// Re-run the command recorded in a manifest
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Enhance(_) => "enhance",
            Command::Detect(_) => "detect",
            Command::Eval(_) => "eval",
            Command::Bench(_) => "bench",
            Command::Dataset(_) => "dataset",
            Command::Replay(_) => "replay",
        }
    }
}

/// Options shared by every subcommand that writes files.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CommonArgs {
    /// Key-value config file (see precedence below)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Where to write the run manifest [default: next to the outputs]
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModulationArgs {
    /// sine, bpsk or bfsk
    #[arg(long, default_value = "sine", value_parser = parse_scheme)]
    pub scheme: Scheme,
    /// Carrier frequency, Hz
    #[arg(long, default_value_t = 1000.0)]
    pub carrier: f64,
    /// Symbols per second for keyed schemes
    #[arg(long, default_value_t = 100.0)]
    pub symbol_rate: f64,
    /// Payload as a 0/1 string; random bits from --seed when omitted
    #[arg(long)]
    pub bits: Option<String>,
    /// Peak carrier amplitude
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: sigenhance::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub modulation: ModulationArgs,
    /// Sample rate, Hz
    #[arg(long, default_value_t = 8000)]
    pub rate: u32,
    /// Duration, seconds
    #[arg(long, default_value_t = 1.0)]
    pub dur: f64,
    /// Channel SNR in dB (sets the Gaussian noise level)
    #[arg(long, conflicts_with = "sigma")]
    pub snr: Option<f64>,
    /// Gaussian noise standard deviation
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Per-sample impulse probability
    #[arg(long, default_value_t = 0.0)]
    pub impulse_prob: f64,
    /// Impulse standard deviation
    #[arg(long, default_value_t = 0.0)]
    pub impulse_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output signal (.sgnl or .csv)
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the noiseless signal here
    #[arg(long)]
    pub clean_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BsrArgs {
    /// Linear coefficient a of the double well
    #[arg(long, default_value_t = 1.0)]
    pub bsr_a: f64,
    /// Cubic coefficient b of the double well
    #[arg(long, default_value_t = 1.0)]
    pub bsr_b: f64,
    /// Largest Euler step, seconds
    #[arg(long, default_value_t = 0.01)]
    pub bsr_dt: f64,
}

impl BsrArgs {
    pub fn system(&self) -> BsrSystem {
        BsrSystem {
            a: self.bsr_a,
            b: self.bsr_b,
            dt: self.bsr_dt,
            x0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PipelineArgs {
    /// Disable the impulse preprocessor
    #[arg(long)]
    pub no_inp: bool,
    #[arg(long, default_value_t = 1.5)]
    pub inp_tau0: f64,
    /// Enable the bistable stochastic-resonance stage
    #[arg(long)]
    pub bsr: bool,
    #[command(flatten)]
    pub bsr_system: BsrArgs,
    /// Disable non-local means
    #[arg(long)]
    pub no_nlm: bool,
    /// Patch half-width P
    #[arg(long, default_value_t = 3)]
    pub nlm_patch: usize,
    /// Search half-width S, or `all` [default: 16·P]
    #[arg(long)]
    pub nlm_search: Option<String>,
    /// Smoothing parameter h [default: from a robust noise estimate]
    #[arg(long)]
    pub nlm_h: Option<f64>,
    /// Gaussian patch kernel sigma in samples; 0 is uniform
    #[arg(long, default_value_t = 0.0)]
    pub nlm_kernel_sigma: f64,
    /// Disable the cumulant FIR
    #[arg(long)]
    pub no_fir: bool,
    /// Maximum lag L of the cumulant FIR
    #[arg(long, default_value_t = 64)]
    pub fir_lag: usize,
}

impl PipelineArgs {
    pub fn config(&self) -> Result<PipelineConfig, Failure> {
        let nlm = if self.no_nlm {
            None
        } else {
            let mut c = NlmConfig::with_patch(self.nlm_patch);
            match self.nlm_search.as_deref() {
                None => {}
                Some("all") => c.search_half_width = None,
                Some(s) => {
                    c.search_half_width = Some(s.parse().map_err(|_| {
                        Failure::Usage(format!("--nlm-search expects an integer or `all`, got '{s}'"))
                    })?)
                }
            }
            c.h = self.nlm_h;
            c.kernel_sigma = self.nlm_kernel_sigma;
            Some(c)
        };
        let cfg = PipelineConfig {
            inp: (!self.no_inp).then_some(InpConfig { tau0: self.inp_tau0 }),
            bsr: self.bsr.then(|| self.bsr_system.system()),
            nlm,
            fir_lag: (!self.no_fir).then_some(self.fir_lag),
        };
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EnhanceArgs {
    /// Input signals (.sgnl or .csv)
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file (single input only)
    #[arg(long, conflicts_with = "out_dir", required_unless_present = "out_dir")]
    pub out: Option<PathBuf>,
    /// Output directory; each input is written as `<stem>.enhanced.sgnl`
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Clean reference for the input; appends a report row
    #[arg(long = "ref", value_name = "FILE")]
    pub reference: Option<PathBuf>,
    /// Report CSV appended to when --ref is given [default: report.csv next to the output]
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the designed FIR taps as CSV (single input only)
    #[arg(long)]
    pub taps_out: Option<PathBuf>,
    /// Sample rate assumed for CSV inputs, Hz
    #[arg(long, default_value_t = 8000.0)]
    pub rate: f64,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Noise-floor power of the energy scorer
    #[arg(long, default_value_t = sigenhance::detect::DEFAULT_NOISE_FLOOR)]
    pub floor: f64,
    /// Also write `path,p_signal,p_noise` rows here
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sample rate assumed for CSV inputs, Hz
    #[arg(long, default_value_t = 8000.0)]
    pub rate: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// fig5, timing, snr-vs-samples, ber or gain
    #[arg(long)]
    pub scenario: String,
    /// Comma-separated seeds
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "0")]
    pub seeds: Vec<u64>,
    /// Comma-separated x-axis values [default: the scenario's grid]
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub grid: Option<Vec<f64>>,
    /// Repeats per timed batch; the fastest is reported
    #[arg(long, default_value_t = sigenhance::experiment::DEFAULT_TIMING_REPEATS)]
    pub repeats: usize,
    /// Report CSV
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    /// Comma-separated batch sizes
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "1000,1500,2000,2500,3000,3500,4000,4500,5000")]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = sigenhance::experiment::DEFAULT_TIMING_REPEATS)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV with columns count,wall_time_s
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DatasetArgs {
    #[arg(long, default_value = "sine", value_parser = parse_scheme)]
    pub scheme: Scheme,
    /// Drive frequency, Hz
    #[arg(long, default_value_t = 0.01)]
    pub carrier: f64,
    #[arg(long, default_value_t = 0.001)]
    pub symbol_rate: f64,
    #[arg(long)]
    pub bits: Option<String>,
    /// Drive amplitude; below the static switching threshold by default
    #[arg(long, default_value_t = 0.2)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 1)]
    pub rate: u32,
    #[arg(long, default_value_t = 2000.0)]
    pub dur: f64,
    /// Number of pairs
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Gaussian noise standard deviation
    #[arg(long, default_value_t = 0.55)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub bsr_system: BsrArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run
    pub manifest: PathBuf,
}
