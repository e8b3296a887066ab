use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use sigenhance::bsr::{build_dataset, export_dataset, DatasetParams};
use sigenhance::detect::{detect, EnergyScorer};
use sigenhance::experiment::{
    linear_fit_r2, output_metrics, run_scenario, write_reports_csv, EvalReport, Scenario,
    ScenarioOptions, REPORT_COLUMNS,
};
use sigenhance::metrics::snr_db;
use sigenhance::noise::{add_noise, random_bits, sigma_for_snr, NoiseSpec};
use sigenhance::synth::{generate, ModulationSpec, Scheme};
use sigenhance::{enhance_traced, Signal};

use crate::args::{
    BenchArgs, Command, DatasetArgs, DetectArgs, EnhanceArgs, EvalArgs, GenerateArgs, ReplayArgs,
};
use crate::manifest::{beside, RunManifest};
use crate::Failure;

pub fn run(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Generate(a) => cmd_generate(command, a),
        Command::Enhance(a) => cmd_enhance(command, a),
        Command::Detect(a) => cmd_detect(command, a),
        Command::Eval(a) => cmd_eval(command, a),
        Command::Bench(a) => cmd_bench(command, a),
        Command::Dataset(a) => cmd_dataset(command, a),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn parse_bits(bits: &str) -> Result<Vec<u8>, Failure> {
    bits.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(usage(format!("--bits may only contain 0 and 1, found '{other}'"))),
        })
        .collect()
}

/// Modulation from flags; keyed schemes without `--bits` get one random bit
/// per symbol of the requested duration.
fn modulation(
    scheme: Scheme,
    carrier: f64,
    symbol_rate: f64,
    bits: Option<&str>,
    amplitude: f64,
    dur: f64,
    seed: u64,
) -> Result<ModulationSpec, Failure> {
    let payload = match (scheme, bits) {
        (Scheme::Sine, _) => Vec::new(),
        (_, Some(b)) => parse_bits(b)?,
        (_, None) => random_bits(((dur * symbol_rate).ceil() as usize).max(1), seed),
    };
    let spec = match scheme {
        Scheme::Sine => ModulationSpec::sine(carrier),
        Scheme::Bpsk => ModulationSpec::bpsk(carrier, symbol_rate, payload),
        Scheme::Bfsk => ModulationSpec::bfsk(carrier, symbol_rate, payload),
    };
    Ok(spec.with_amplitude(amplitude))
}

fn check_duration(dur: f64, rate: u32) -> Result<(), Failure> {
    if !(dur.is_finite() && dur * rate as f64 >= 1.0) {
        return Err(usage(format!("--dur {dur} s gives no samples at {rate} Hz")));
    }
    Ok(())
}

fn load(path: &Path, csv_rate: f64) -> anyhow::Result<Signal> {
    Signal::load(path, csv_rate).with_context(|| format!("cannot load {}", path.display()))
}

fn save(signal: &Signal, path: &Path) -> anyhow::Result<()> {
    signal
        .save(path)
        .with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_generate(command: &Command, a: &GenerateArgs) -> Result<(), Failure> {
    check_duration(a.dur, a.rate)?;
    let m = &a.modulation;
    let spec = modulation(m.scheme, m.carrier, m.symbol_rate, m.bits.as_deref(), m.amplitude, a.dur, a.seed)?;
    let rate = a.rate as f64;
    spec.validate(rate).map_err(usage)?;
    let clean = generate(&spec, rate, a.dur)?;
    let sigma = match (a.snr, a.sigma) {
        (Some(snr), _) => sigma_for_snr(clean.mean_power(), snr),
        (None, Some(s)) => s,
        (None, None) => 0.0,
    };
    let noise = NoiseSpec::gaussian(sigma, a.seed).with_impulses(a.impulse_prob, a.impulse_sigma);
    noise.validate().map_err(usage)?;
    let noisy = add_noise(&clean, &noise)?;

    save(&noisy, &a.out)?;
    let mut manifest = RunManifest::new(command);
    manifest.seed = Some(a.seed);
    manifest.outputs.push(a.out.clone());
    if let Some(p) = &a.clean_out {
        save(&clean, p)?;
        manifest.outputs.push(p.clone());
    }
    let path = a.common.manifest.clone().unwrap_or_else(|| beside(&a.out));
    manifest.write(&path)?;
    println!("wrote {} ({} samples)", a.out.display(), noisy.len());
    Ok(())
}

fn enhanced_name(input: &Path) -> PathBuf {
    let stem = input.file_stem().unwrap_or_default().to_string_lossy();
    PathBuf::from(format!("{stem}.enhanced.sgnl"))
}

/// Appends `row` to `path`, writing the header first when the file is new
/// or empty.
fn append_report(path: &Path, row: &EvalReport) -> anyhow::Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("cannot open report {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(REPORT_COLUMNS)?;
    }
    w.write_record(row.record())?;
    w.flush()?;
    Ok(())
}

fn cmd_enhance(command: &Command, a: &EnhanceArgs) -> Result<(), Failure> {
    let cfg = a.pipeline.config()?;
    let single = a.inputs.len() == 1;
    if !single {
        if a.out.is_some() {
            return Err(usage("--out takes a single input; use --out-dir for several"));
        }
        if a.reference.is_some() || a.taps_out.is_some() {
            return Err(usage("--ref and --taps-out take a single input"));
        }
    }
    let outputs: Vec<PathBuf> = match (&a.out, &a.out_dir) {
        (Some(out), _) => vec![out.clone()],
        (None, Some(dir)) => {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
            a.inputs.iter().map(|i| dir.join(enhanced_name(i))).collect()
        }
        (None, None) => return Err(usage("one of --out or --out-dir is required")),
    };

    let start = Instant::now();
    // Inputs are processed in parallel; results keep input order.
    let results = a
        .inputs
        .par_iter()
        .map(|path| -> anyhow::Result<_> {
            let y = load(path, a.rate)?;
            let (out, filter) =
                enhance_traced(&y, &cfg).with_context(|| format!("cannot enhance {}", path.display()))?;
            Ok((y, out, filter))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let wall = start.elapsed().as_secs_f64();

    let mut manifest = RunManifest::new(command);
    manifest.pipeline = Some(cfg.clone());
    manifest.inputs = a.inputs.clone();
    for ((_, out, _), path) in results.iter().zip(&outputs) {
        save(out, path)?;
        manifest.outputs.push(path.clone());
    }
    if let Some(taps_path) = &a.taps_out {
        let filter = results[0]
            .2
            .as_ref()
            .ok_or_else(|| usage("--taps-out needs the FIR stage enabled"))?;
        let file = std::fs::File::create(taps_path)
            .with_context(|| format!("cannot write {}", taps_path.display()))?;
        filter.write_taps_csv(file)?;
        manifest.outputs.push(taps_path.clone());
    }
    if let Some(ref_path) = &a.reference {
        let clean = load(ref_path, a.rate)?;
        let (noisy, out, _) = &results[0];
        let snr_in = snr_db(&clean, noisy).context("input SNR against --ref")?;
        let (snr_out, alpha) = output_metrics(&clean, out, &cfg).context("output SNR against --ref")?;
        let row = EvalReport {
            scenario: "enhance".into(),
            param: 0.0,
            seed: 0,
            snr_in_db: snr_in,
            snr_out_db: snr_out,
            ber: None,
            gain_alpha: alpha,
            wall_time_s: wall,
            config: cfg.to_string(),
        };
        let report = a.report.clone().unwrap_or_else(|| {
            outputs[0]
                .parent()
                .unwrap_or(Path::new(""))
                .join("report.csv")
        });
        append_report(&report, &row)?;
        manifest.inputs.push(ref_path.clone());
        manifest.outputs.push(report);
        println!(
            "snr_in_db={} snr_out_db={} gain_alpha={}",
            sigenhance::experiment::format_metric(snr_in),
            sigenhance::experiment::format_metric(snr_out),
            sigenhance::experiment::format_metric(alpha)
        );
    }
    let path = a.common.manifest.clone().unwrap_or_else(|| match &a.out_dir {
        Some(dir) if a.out.is_none() => dir.join("manifest.json"),
        _ => beside(&outputs[0]),
    });
    manifest.write(&path)?;
    for path in &outputs {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_detect(command: &Command, a: &DetectArgs) -> Result<(), Failure> {
    let scorer = EnergyScorer::new(a.floor).map_err(usage)?;
    let results = a
        .inputs
        .par_iter()
        .map(|path| -> anyhow::Result<_> {
            let y = load(path, a.rate)?;
            Ok(detect(&y, &scorer)?)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    for (path, r) in a.inputs.iter().zip(&results) {
        println!("{}\t{:.6}", path.display(), r.p_signal);
    }
    let mut manifest = RunManifest::new(command);
    manifest.inputs = a.inputs.clone();
    if let Some(out) = &a.out {
        let mut w = csv::Writer::from_path(out).with_context(|| format!("cannot write {}", out.display()))?;
        w.write_record(["path", "p_signal", "p_noise"])
            .map_err(anyhow::Error::from)?;
        for (path, r) in a.inputs.iter().zip(&results) {
            w.write_record([
                path.display().to_string(),
                format!("{:?}", r.p_signal),
                format!("{:?}", r.p_noise),
            ])
            .map_err(anyhow::Error::from)?;
        }
        w.flush().map_err(anyhow::Error::from)?;
        manifest.outputs.push(out.clone());
    }
    let path = a.common.manifest.clone().unwrap_or_else(|| match &a.out {
        Some(out) => beside(out),
        None => PathBuf::from("detect.manifest.json"),
    });
    manifest.write(&path)?;
    Ok(())
}

fn write_reports(path: &Path, rows: &[EvalReport]) -> anyhow::Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    write_reports_csv(rows, file)?;
    Ok(())
}

fn cmd_eval(command: &Command, a: &EvalArgs) -> Result<(), Failure> {
    let scenario = Scenario::from_name(&a.scenario).map_err(usage)?;
    let opts = ScenarioOptions {
        pipeline: a.pipeline.config()?,
        grid: a.grid.clone(),
        timing_repeats: a.repeats,
        ..ScenarioOptions::default()
    };
    if a.repeats == 0 {
        return Err(usage("--repeats must be >= 1"));
    }
    let rows = run_scenario(scenario, &a.seeds, &opts).map_err(|e| match e {
        sigenhance::Error::InvalidInput(_) => usage(e),
        other => Failure::Runtime(other.into()),
    })?;
    write_reports(&a.out, &rows)?;
    let mut manifest = RunManifest::new(command);
    manifest.pipeline = Some(opts.pipeline);
    manifest.seed = a.seeds.first().copied();
    manifest.outputs.push(a.out.clone());
    manifest.write(&a.common.manifest.clone().unwrap_or_else(|| beside(&a.out)))?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

fn cmd_bench(command: &Command, a: &BenchArgs) -> Result<(), Failure> {
    if a.counts.is_empty() || a.counts.contains(&0) {
        return Err(usage("--counts must list positive batch sizes"));
    }
    if a.repeats == 0 {
        return Err(usage("--repeats must be >= 1"));
    }
    let opts = ScenarioOptions {
        pipeline: a.pipeline.config()?,
        grid: Some(a.counts.iter().map(|&c| c as f64).collect()),
        timing_repeats: a.repeats,
        ..ScenarioOptions::default()
    };
    let rows = run_scenario(Scenario::Timing, &[a.seed], &opts)?;
    let mut w = csv::Writer::from_path(&a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    w.write_record(["count", "wall_time_s"]).map_err(anyhow::Error::from)?;
    for r in &rows {
        w.write_record([format!("{}", r.param), format!("{}", r.wall_time_s)])
            .map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;
    let mut manifest = RunManifest::new(command);
    manifest.pipeline = Some(opts.pipeline);
    manifest.seed = Some(a.seed);
    manifest.outputs.push(a.out.clone());
    manifest.write(&a.common.manifest.clone().unwrap_or_else(|| beside(&a.out)))?;
    for r in &rows {
        println!("{:>6} signals  {:.3} s", r.param, r.wall_time_s);
    }
    if rows.len() >= 2 {
        let x: Vec<f64> = rows.iter().map(|r| r.param).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.wall_time_s).collect();
        println!("linear fit R² = {:.4}", linear_fit_r2(&x, &y));
    }
    Ok(())
}

fn cmd_dataset(command: &Command, a: &DatasetArgs) -> Result<(), Failure> {
    check_duration(a.dur, a.rate)?;
    let rate = a.rate as f64;
    let spec = modulation(a.scheme, a.carrier, a.symbol_rate, a.bits.as_deref(), a.amplitude, a.dur, a.seed)?;
    spec.validate(rate).map_err(usage)?;
    let sys = a.bsr_system.system();
    sys.validate().map_err(usage)?;
    let noise = NoiseSpec::gaussian(a.sigma, a.seed);
    noise.validate().map_err(usage)?;
    if a.count == 0 {
        return Err(usage("--count must be >= 1"));
    }
    let params = DatasetParams {
        sample_rate: rate,
        duration: a.dur,
        count: a.count,
        seed: a.seed,
    };
    let pairs = build_dataset(&[spec], &sys, &noise, params)?;
    export_dataset(&pairs, &a.out_dir)
        .with_context(|| format!("cannot write dataset to {}", a.out_dir.display()))?;
    let mut manifest = RunManifest::new(command);
    manifest.seed = Some(a.seed);
    manifest.outputs.push(a.out_dir.join("pairs.csv"));
    for id in 0..pairs.len() {
        manifest.outputs.push(a.out_dir.join(format!("pair_{id}_pre.sgnl")));
        manifest.outputs.push(a.out_dir.join(format!("pair_{id}_post.sgnl")));
    }
    manifest.write(&a.common.manifest.clone().unwrap_or_else(|| a.out_dir.join("manifest.json")))?;
    let resonant = pairs.iter().filter(|p| p.resonant).count();
    println!("wrote {} pairs to {} ({resonant} resonant)", pairs.len(), a.out_dir.display());
    Ok(())
}

fn cmd_replay(a: &ReplayArgs) -> Result<(), Failure> {
    let manifest = RunManifest::read(&a.manifest)?;
    if let Command::Replay(_) = manifest.command {
        return Err(usage("a replay manifest cannot itself be replayed"));
    }
    if manifest.version != env!("CARGO_PKG_VERSION") {
        log::warn!(
            "manifest was written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    run(&manifest.command)
}
