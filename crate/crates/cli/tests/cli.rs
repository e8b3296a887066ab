use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sigenhance"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn report_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn generate_writes_expected_sample_count() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["generate", "--scheme", "sine", "--carrier", "1000", "--rate", "8000", "--dur", "0.1", "--out", "s.sgnl"]);
    let bytes = fs::read(t.path().join("s.sgnl")).unwrap();
    assert_eq!(bytes.len(), 8 + 800 * 8);
    assert_eq!(&bytes[..4], b"SGNL");
    let m = manifest(&t.path().join("s.sgnl.manifest.json"));
    assert_eq!(m["subcommand"], "generate");
    assert_eq!(m["command"]["generate"]["rate"], 8000);
    assert_eq!(m["command"]["generate"]["modulation"]["amplitude"], 1.0);
}

#[test]
fn missing_out_is_usage_error() {
    let t = TempDir::new().unwrap();
    let out = run(t.path(), &["generate", "--scheme", "sine"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn generate_is_deterministic_per_seed() {
    let t = TempDir::new().unwrap();
    let args = |out: &'static str, seed: &'static str| {
        ["generate", "--scheme", "bpsk", "--dur", "0.2", "--snr", "0", "--impulse-prob", "0.01", "--impulse-sigma", "5", "--seed", seed, "--out", out]
    };
    ok(t.path(), &args("a.sgnl", "7"));
    ok(t.path(), &args("b.sgnl", "7"));
    ok(t.path(), &args("c.sgnl", "8"));
    let read = |n: &str| fs::read(t.path().join(n)).unwrap();
    assert_eq!(read("a.sgnl"), read("b.sgnl"));
    assert_ne!(read("a.sgnl"), read("c.sgnl"));
}

#[test]
fn enhance_against_itself_reports_inf() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["generate", "--dur", "0.1", "--out", "s.sgnl"]);
    // Peak-normalized, in-range input: INP alone is the identity.
    ok(t.path(), &["enhance", "s.sgnl", "--out", "e.sgnl", "--ref", "s.sgnl", "--no-nlm", "--no-fir"]);
    let rows = report_rows(&t.path().join("report.csv"));
    assert_eq!(rows[0][..5], ["scenario", "param", "seed", "snr_in_db", "snr_out_db"]);
    assert_eq!(rows[1][3], "inf");
    assert_eq!(rows[1][4], "inf");
    // A second run appends without repeating the header.
    ok(t.path(), &["enhance", "s.sgnl", "--out", "e2.sgnl", "--ref", "s.sgnl"]);
    let rows = report_rows(&t.path().join("report.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][3], "inf");
}

#[test]
fn all_stages_disabled_is_usage_error() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["generate", "--dur", "0.1", "--out", "s.sgnl"]);
    let out = run(t.path(), &["enhance", "s.sgnl", "--out", "e.sgnl", "--no-inp", "--no-nlm", "--no-fir"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at least one stage"));
}

#[test]
fn corrupt_input_reports_byte_offset() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("bad.sgnl"), b"SGNX\x40\x1f\x00\x00").unwrap();
    let out = run(t.path(), &["enhance", "bad.sgnl", "--out", "e.sgnl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("byte 0"), "{}", stderr(&out));

    let mut bytes = b"SGNL\x40\x1f\x00\x00".to_vec();
    bytes.extend_from_slice(&1.0f64.to_le_bytes());
    bytes.extend_from_slice(&[0, 1, 2]);
    fs::write(t.path().join("short.sgnl"), bytes).unwrap();
    let out = run(t.path(), &["enhance", "short.sgnl", "--out", "e.sgnl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("byte 16"), "{}", stderr(&out));

    let out = run(t.path(), &["enhance", "missing.sgnl", "--out", "e.sgnl"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fig5_files_gain_snr() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &[
        "generate", "--dur", "7.5", "--snr", "1.121", "--seed", "3",
        "--out", "noisy.sgnl", "--clean-out", "clean.sgnl",
    ]);
    ok(t.path(), &["enhance", "noisy.sgnl", "--ref", "clean.sgnl", "--out", "enh.sgnl", "--taps-out", "taps.csv"]);
    let rows = report_rows(&t.path().join("report.csv"));
    let snr_in: f64 = rows[1][3].parse().unwrap();
    let snr_out: f64 = rows[1][4].parse().unwrap();
    assert!((snr_in - 1.121).abs() < 0.3);
    assert!(snr_out - snr_in > 6.0, "{snr_in} -> {snr_out}");
    let taps = fs::read_to_string(t.path().join("taps.csv")).unwrap();
    assert_eq!(taps.lines().next(), Some("index,tap"));
    assert_eq!(taps.lines().count(), 1 + 129);
}

#[test]
fn replay_reproduces_outputs() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    ok(p, &["generate", "--scheme", "bfsk", "--dur", "0.3", "--sigma", "0.5", "--seed", "4", "--out", "g.sgnl"]);
    ok(p, &["enhance", "g.sgnl", "--out", "e.sgnl", "--nlm-kernel-sigma", "1.5"]);
    ok(p, &["dataset", "--count", "3", "--dur", "300", "--out-dir", "ds"]);
    ok(p, &["eval", "--scenario", "ber", "--grid", "10", "--seeds", "1,2", "--out", "ber.csv"]);
    let files = ["g.sgnl", "e.sgnl", "ds/pairs.csv", "ds/pair_2_post.sgnl", "ber.csv"];
    let manifests = ["g.sgnl.manifest.json", "e.sgnl.manifest.json", "ds/manifest.json", "ber.csv.manifest.json"];
    let before: Vec<Vec<u8>> = files.iter().chain(&manifests).map(|f| fs::read(p.join(f)).unwrap()).collect();
    for f in files {
        fs::remove_file(p.join(f)).unwrap();
    }
    // Inputs come back first, so replaying in the original order works.
    for m in manifests {
        ok(p, &["replay", m]);
    }
    let files: Vec<&str> = files.iter().chain(&manifests).copied().collect();
    for (f, old) in files.iter().zip(&before) {
        let new = fs::read(p.join(f)).unwrap();
        if f.ends_with(".csv") && f.starts_with("ber") {
            // Everything but the timing column is reproduced.
            let strip = |b: &[u8]| -> Vec<String> {
                String::from_utf8_lossy(b)
                    .lines()
                    .map(|l| {
                        let mut c: Vec<&str> = l.split(',').collect();
                        c.remove(7);
                        c.join(",")
                    })
                    .collect()
            };
            assert_eq!(strip(&new), strip(old), "{f}");
        } else {
            assert_eq!(&new, old, "{f}");
        }
    }
}

#[test]
fn config_file_precedence() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    ok(p, &["generate", "--dur", "0.2", "--sigma", "0.3", "--out", "s.sgnl"]);
    fs::write(p.join("run.conf"), "# chain settings\nnlm_patch = 4\nfir-lag = 32\nno-inp = true\n").unwrap();
    ok(p, &["enhance", "s.sgnl", "--out", "e.sgnl", "--config", "run.conf", "--fir-lag", "16"]);
    let m = manifest(&p.join("e.sgnl.manifest.json"));
    assert_eq!(m["pipeline"]["nlm"]["patch_half_width"], 4);
    assert_eq!(m["pipeline"]["nlm"]["search_half_width"], 64);
    assert_eq!(m["pipeline"]["fir_lag"], 16);
    assert!(m["pipeline"]["inp"].is_null());

    // Defaults fill whatever neither source sets.
    ok(p, &["enhance", "s.sgnl", "--out", "d.sgnl"]);
    let m = manifest(&p.join("d.sgnl.manifest.json"));
    assert_eq!(m["pipeline"]["nlm"]["patch_half_width"], 3);
    assert_eq!(m["pipeline"]["fir_lag"], 64);
    assert_eq!(m["pipeline"]["inp"]["tau0"], 1.5);

    fs::write(p.join("bad.conf"), "nlm-patchy = 4\n").unwrap();
    let out = run(p, &["enhance", "s.sgnl", "--out", "e.sgnl", "--config", "bad.conf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nlm-patchy"));

    let out = run(p, &["enhance", "s.sgnl", "--out", "e.sgnl", "--config", "absent.conf"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seeds_from_config_are_replaced_by_flag() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    fs::write(p.join("e.conf"), "seeds = 1,2,3\ngrid = 10\n").unwrap();
    ok(p, &["eval", "--scenario", "ber", "--config", "e.conf", "--seeds", "5", "--out", "r.csv"]);
    let rows = report_rows(&p.join("r.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "ber");
    assert_eq!(rows[1][1], "10");
    assert_eq!(rows[1][2], "5");
}

#[test]
fn batch_enhance_and_detect_keep_input_order() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    ok(p, &["generate", "--dur", "0.1", "--amplitude", "1", "--out", "loud.sgnl"]);
    ok(p, &["generate", "--dur", "0.1", "--amplitude", "0.01", "--out", "quiet.csv"]);
    ok(p, &["generate", "--dur", "0.1", "--amplitude", "0.5", "--sigma", "0.1", "--out", "mid.sgnl"]);
    let stdout = ok(p, &["detect", "quiet.csv", "loud.sgnl", "mid.sgnl", "--out", "det.csv"]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("quiet.csv\t"));
    assert!(lines[1].starts_with("loud.sgnl\t"));
    let p_quiet: f64 = lines[0].split('\t').nth(1).unwrap().parse().unwrap();
    let p_loud: f64 = lines[1].split('\t').nth(1).unwrap().parse().unwrap();
    assert!(p_quiet < 0.5 && p_loud > 0.97);
    assert!(p.join("det.csv.manifest.json").exists());

    ok(p, &["enhance", "loud.sgnl", "quiet.csv", "mid.sgnl", "--out-dir", "out", "--no-fir"]);
    let m = manifest(&p.join("out/manifest.json"));
    let outs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outs, ["out/loud.enhanced.sgnl", "out/quiet.enhanced.sgnl", "out/mid.enhanced.sgnl"]);
    for o in outs {
        assert!(p.join(o).exists());
    }

    let out = run(p, &["enhance", "loud.sgnl", "mid.sgnl", "--out", "x.sgnl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_single_count_gives_single_row() {
    let t = TempDir::new().unwrap();
    let stdout = ok(t.path(), &["bench", "--counts", "1000", "--repeats", "1", "--out", "bench.csv"]);
    assert!(stdout.contains("1000 signals"));
    let rows = report_rows(&t.path().join("bench.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], ["count", "wall_time_s"]);
    assert_eq!(rows[1][0], "1000");
    assert!(rows[1][1].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn eval_report_has_fixed_columns_and_unknown_scenario_fails() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    ok(p, &["eval", "--scenario", "snr-vs-samples", "--grid", "4", "--out", "avg.csv"]);
    let rows = report_rows(&p.join("avg.csv"));
    assert_eq!(
        rows[0],
        ["scenario", "param", "seed", "snr_in_db", "snr_out_db", "ber", "gain_alpha", "wall_time_s", "config"]
    );
    assert_eq!(rows[1][5], "");
    let m = manifest(&p.join("avg.csv.manifest.json"));
    assert_eq!(m["report_schema_version"], 1);
    assert_eq!(m["report_columns"].as_array().unwrap().len(), 9);

    let out = run(p, &["eval", "--scenario", "fig9", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("fig5"));
}

#[test]
fn help_documents_precedence_and_exit_codes() {
    let out = bin().args(["enhance", "--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("flags > --config file > built-in defaults"));
    assert!(text.contains("2 usage error"));
}

#[test]
fn nyquist_violation_is_usage_error() {
    let t = TempDir::new().unwrap();
    let out = run(t.path(), &["generate", "--carrier", "5000", "--out", "x.sgnl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Nyquist"));
}
