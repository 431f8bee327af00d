//! CLI behavior: summaries, exit codes, and artifact reloadability.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

struct CliRun {
    stdout: String,
    stderr: String,
    code: i32,
}

fn run_cli(args: &[&str]) -> CliRun {
    let out = Command::new(env!("CARGO_BIN_EXE_lexqual"))
        .args(args)
        .output()
        .expect("binary runs");
    CliRun {
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        code: out.status.code().unwrap_or(-1),
    }
}

fn expect_ok(args: &[&str]) -> CliRun {
    let run = run_cli(args);
    assert_eq!(
        run.code, 0,
        "command {args:?} failed:\n{}\n{}",
        run.stdout, run.stderr
    );
    run
}

fn write(path: &Path, content: &str) -> PathBuf {
    fs::write(path, content).unwrap();
    path.to_path_buf()
}

#[test]
fn analyze_three_word_fixture_reports_two_thirds() {
    let dir = tempfile::tempdir().unwrap();
    let tokens = write(&dir.path().join("tokens.txt"), "talo\nkala\nxyz\n");
    let lexicon = write(&dir.path().join("lex.txt"), "talo\nkala\n");
    let out = dir.path().join("out");
    let run = expect_ok(&[
        "analyze",
        "--tokens",
        tokens.to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        run.stdout.contains("token rate: 66.7%"),
        "stdout:\n{}",
        run.stdout
    );
    assert!(out.join("stats.tsv").exists());
}

#[test]
fn profile_without_calibration_sources_fails_when_defaults_disabled() {
    let dir = tempfile::tempdir().unwrap();
    let tokens = write(&dir.path().join("tokens.txt"), "talo\ntalo\nkala\nxyz\n");
    let lexicon = write(&dir.path().join("lex.txt"), "talo\nkala\n");
    let run = run_cli(&[
        "profile",
        "--tokens",
        tokens.to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--no-default-oov",
        "--bands",
        "1",
        "--mmax",
        "1",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(run.code, 2, "stderr:\n{}", run.stderr);
    assert!(run.stderr.contains("calibration"));
}

#[test]
fn missing_inputs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let lexicon = write(&dir.path().join("lex.txt"), "talo\n");
    let run = run_cli(&[
        "analyze",
        "--tokens",
        dir.path().join("missing.txt").to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(run.code, 2);
}

#[test]
fn malformed_manifest_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write(&dir.path().join("m.tsv"), "d1\tdoc.txt\tnot-a-year\n");
    let run = run_cli(&[
        "ingest",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(run.code, 3, "stderr:\n{}", run.stderr);
    assert!(run.stderr.contains("line 1"));
}

#[test]
fn adapter_failure_is_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let tokens = write(&dir.path().join("tokens.txt"), "talo\nkala\n");
    let lexicon = write(&dir.path().join("lex.txt"), "muu\n");
    let run = run_cli(&[
        "analyze",
        "--tokens",
        tokens.to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--adapter",
        "exit 3",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(run.code, 4, "stderr:\n{}", run.stderr);
}

/// Full flow on a small fixture: freq/stats/profile artifacts reload through
/// their modules, and the printed summary matches the emitted document.
#[test]
fn artifacts_reload_and_summary_matches_document() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = String::new();
    for _ in 0..40 {
        corpus.push_str("talo\n");
    }
    for _ in 0..25 {
        corpus.push_str("wesi\n");
    }
    for _ in 0..20 {
        corpus.push_str("kala\n");
    }
    corpus.push_str("qqq\nzzz\n");
    let tokens = write(&dir.path().join("tokens.txt"), &corpus);
    let lexicon = write(&dir.path().join("lex.txt"), "talo\nkala\nvesi\n");
    let out = dir.path().join("out");

    expect_ok(&[
        "freq",
        "--tokens",
        tokens.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let table = lexqual::FrequencyTable::read_tsv_file(&out.join("freq.tsv")).unwrap();
    assert_eq!(table.n(), 87);
    assert_eq!(table.v(), 5);
    let spectrum = lexqual::FrequencySpectrum::read_tsv_file(&out.join("spectrum.tsv")).unwrap();
    assert_eq!(spectrum.total_types(), 5);

    expect_ok(&[
        "analyze",
        "--freq",
        out.join("freq.tsv").to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let (table2, stats, _) = lexqual::recognize::read_stats_file(&out.join("stats.tsv")).unwrap();
    assert_eq!(table2.entries(), table.entries());
    assert_eq!(stats.recognized_tokens(), 60); // talo + kala

    let run = expect_ok(&[
        "profile",
        "--stats",
        out.join("stats.tsv").to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--bands",
        "1,3",
        "--mmax",
        "1",
        "--oov",
        "0:0",
        "--out",
        out.to_str().unwrap(),
    ]);
    let profile = lexqual::QualityProfile::read_json(&out.join("profile.json")).unwrap();

    // summary lines print the same quantities the document stores
    let expect_raw = format!(
        "raw token rate: {}  raw type rate: {}",
        lexqual::report::fmt_pct1(profile.raw.recognized_tokens, profile.raw.n),
        lexqual::report::fmt_pct1(profile.raw.recognized_types, profile.raw.v),
    );
    assert!(
        run.stdout.contains(&expect_raw),
        "summary/document mismatch:\n{}\nexpected: {expect_raw}",
        run.stdout
    );
    let d = &profile.decomposition;
    let expect_interval = format!(
        "approx rate interval: {} - {}",
        lexqual::report::fmt_pct1(d.approx_tokens_low(), d.n),
        lexqual::report::fmt_pct1(d.approx_tokens_high(), d.n),
    );
    assert!(run.stdout.contains(&expect_interval), "{}", run.stdout);

    // w/v recovery visible end to end: 25 wesi tokens recoverable
    assert_eq!(profile.wv.recovered_tokens(), 25);

    // re-rendering the loaded profile reproduces the file byte for byte
    let rendered = dir.path().join("rendered");
    expect_ok(&[
        "report",
        "--profile",
        out.join("profile.json").to_str().unwrap(),
        "--format",
        "json",
        "--out",
        rendered.to_str().unwrap(),
    ]);
    assert_eq!(
        fs::read(out.join("profile.json")).unwrap(),
        fs::read(rendered.join("profile.json")).unwrap()
    );

    // CSV export exists for every section
    expect_ok(&[
        "report",
        "--profile",
        out.join("profile.json").to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        rendered.to_str().unwrap(),
    ]);
    for section in [
        "raw",
        "bands",
        "spectrum",
        "decades",
        "lengths",
        "wv",
        "calibration",
        "decomposition",
    ] {
        assert!(rendered.join(format!("profile_{section}.csv")).exists());
    }
}

#[test]
fn compare_rejects_mismatched_corpora_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let lexicon = write(&dir.path().join("lex.txt"), "talo\nkala\n");

    let make_profile = |name: &str, body: &str| {
        let tokens = write(&dir.path().join(format!("{name}.txt")), body);
        let out = dir.path().join(name);
        expect_ok(&[
            "profile",
            "--tokens",
            tokens.to_str().unwrap(),
            "--doc-id",
            name,
            "--lexicon",
            lexicon.to_str().unwrap(),
            "--bands",
            "1",
            "--mmax",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        out.join("profile.json")
    };
    let a = make_profile("a", "talo\ntalo\nxyz\n");
    let b = make_profile("b", "kala\nkala\nxyz\n");

    let run = run_cli(&[
        "compare",
        "--before",
        a.to_str().unwrap(),
        "--after",
        b.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 3, "stderr:\n{}", run.stderr);

    let forced = expect_ok(&[
        "compare",
        "--before",
        a.to_str().unwrap(),
        "--after",
        b.to_str().unwrap(),
        "--force",
    ]);
    assert!(forced.stderr.contains("forced"));
}

#[test]
fn simulate_and_score_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = String::new();
    for i in 0..600 {
        corpus.push_str(["vesi", "talo", "kala", "silta", "lintu"][i % 5]);
        corpus.push('\n');
    }
    let tokens = write(&dir.path().join("tokens.txt"), &corpus);
    let lexicon = write(
        &dir.path().join("lex.txt"),
        "vesi\ntalo\nkala\nsilta\nlintu\n",
    );
    let sim = dir.path().join("sim");
    let run = expect_ok(&[
        "simulate",
        "--tokens",
        tokens.to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--wer",
        "0.2",
        "--seed",
        "9",
        "--out",
        sim.to_str().unwrap(),
    ]);
    assert!(run.stdout.contains("corrupted"));

    let prof = dir.path().join("prof");
    expect_ok(&[
        "profile",
        "--tokens",
        sim.join("noisy.txt").to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--bands",
        "1,2",
        "--mmax",
        "1",
        "--oov",
        "0:0",
        "--out",
        prof.to_str().unwrap(),
    ]);

    let run = expect_ok(&[
        "simulate",
        "--profile",
        prof.join("profile.json").to_str().unwrap(),
        "--truth",
        sim.join("truth.txt").to_str().unwrap(),
    ]);
    assert!(run.stdout.contains("adjusted gap"), "{}", run.stdout);
}

#[test]
fn shipped_noise_config_drives_simulate() {
    let config =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/fraktur_confusions.toml");
    assert!(config.exists(), "shipped config missing");

    let dir = tempfile::tempdir().unwrap();
    let tokens = write(&dir.path().join("tokens.txt"), &"vanha\nvesi\n".repeat(200));
    let lexicon = write(&dir.path().join("lex.txt"), "vanha\nvesi\n");
    let out = dir.path().join("sim");
    let run = expect_ok(&[
        "simulate",
        "--tokens",
        tokens.to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--noise",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.stdout.contains("corrupted"), "{}", run.stdout);
    assert!(out.join("noisy.txt").exists());
    assert!(out.join("truth.txt").exists());
}

#[test]
fn calibrate_writes_reloadable_interval() {
    let dir = tempfile::tempdir().unwrap();
    // reference corpus: 4 of 5 tokens recognized -> OOV 0.2
    let tokens = write(
        &dir.path().join("ref.txt"),
        "talo\ntalo\nkala\nvesi\nmuinainen\n",
    );
    let lexicon = write(&dir.path().join("lex.txt"), "talo\nkala\nvesi\n");
    let freq_dir = dir.path().join("freq");
    expect_ok(&[
        "freq",
        "--tokens",
        tokens.to_str().unwrap(),
        "--out",
        freq_dir.to_str().unwrap(),
    ]);
    let cal_dir = dir.path().join("cal");
    let reference = format!("VNS={}", freq_dir.join("freq.tsv").display());
    expect_ok(&[
        "calibrate",
        "--reference",
        &reference,
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--out",
        cal_dir.to_str().unwrap(),
    ]);
    let cal = lexqual::report::read_calibration_json(&cal_dir.join("calibration.json")).unwrap();
    assert!((cal.low - 0.2).abs() < 1e-9);
    assert!((cal.high - 0.2).abs() < 1e-9);
    assert_eq!(cal.provenance.len(), 1);

    // and profile consumes it
    let out = dir.path().join("out");
    expect_ok(&[
        "profile",
        "--tokens",
        tokens.to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--calibration",
        cal_dir.join("calibration.json").to_str().unwrap(),
        "--bands",
        "1",
        "--mmax",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let profile = lexqual::QualityProfile::read_json(&out.join("profile.json")).unwrap();
    assert!((profile.calibration.low - 0.2).abs() < 1e-9);
}
