//! End-to-end checks of the `wavecut` binary: exit codes, output formats,
//! and error reporting.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

/// Mach-Zehnder with one driven modulator in the lower arm. `BS1.in2` is
/// deliberately left open to exercise auto-termination warnings.
const MZ_ACTIVE: &str = "\
component S1 source
component BS1 beamsplitter
component M1 mirror
component A1 modulator eps=0.01 freq=5
component BS2 beamsplitter
component D1 detector
component D2 detector
connect S1.out -> BS1.in1 as src
connect BS1.out1 -> M1.in as arm1a
connect M1.out -> BS2.in1 as arm1b
connect BS1.out2 -> A1.in as arm2a
connect A1.out -> BS2.in2 as arm2b
connect BS2.out1 -> D1.in as d1
connect BS2.out2 -> D2.in as d2
cut mid = arm1b, arm2b
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavecut"))
}

fn tmpfile(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn netlist_file(name: &str, text: &str) -> PathBuf {
    let path = tmpfile(name);
    fs::write(&path, text).expect("write netlist");
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf8 stdout")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf8 stderr")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).expect("well-formed JSON")
}

#[test]
fn simulate_reports_unit_power() {
    let out = run(&["simulate", "--preset", "nested"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    let total: f64 = doc["detectors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["p"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(doc["energy"]["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn simulate_csv_has_header() {
    let out = run(&["simulate", "--preset", "simple", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("edge,re,im,p\n"));
}

#[test]
fn weak_values_across_mid_cut() {
    let out = run(&[
        "weak", "--preset", "nested", "--post-select", "D2", "--format", "csv",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let row = text
        .lines()
        .find(|l| l.starts_with("q2_c,"))
        .expect("q2_c row");
    let re: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((re + 0.5).abs() < 1e-12, "q2_c weak value, got {re}");
}

#[test]
fn weak_dark_port_exits_2() {
    let out = run(&["weak", "--preset", "simple", "--post-select", "D1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("diverge"), "{}", stderr(&out));
}

#[test]
fn encounter_cut_is_abl_normalized() {
    let out = run(&[
        "encounter", "--preset", "nested", "--post-select", "D2", "--cut", "mid",
        "--format", "csv",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let p_of = |edge: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(&format!("{edge},")))
            .unwrap_or_else(|| panic!("{edge} row"))
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((p_of("q1_c") - 2.0 / 3.0).abs() < 1e-12);
    assert!((p_of("q2_c") - 1.0 / 6.0).abs() < 1e-12);
    assert!((p_of("q3_c") - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn encounter_unknown_cut_exits_1() {
    let out = run(&[
        "encounter", "--preset", "nested", "--post-select", "D2", "--cut", "nope",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn check_passes_on_presets() {
    for preset in ["simple", "nested", "double_nested"] {
        let out = run(&["check", "--preset", preset]);
        assert_eq!(code(&out), 0, "{preset}: {}", stderr(&out));
        let doc = json(&out);
        assert_eq!(doc["pass"], serde_json::json!(true));
        assert_eq!(doc["lossless"], serde_json::json!(true));
    }
}

#[test]
fn check_tolerance_sources() {
    // An impossible tolerance from the environment forces a failure.
    let out = bin()
        .args(["check", "--preset", "nested"])
        .env("WAVECUT_TOL", "1e-30")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("sum rules violated"));

    // A malformed value is a usage error.
    let out = bin()
        .args(["check", "--preset", "nested"])
        .env("WAVECUT_TOL", "abc")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);

    // The flag beats the environment.
    let out = bin()
        .args(["check", "--preset", "nested", "--tol", "1e-3"])
        .env("WAVECUT_TOL", "1e-30")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn netlist_simulate_and_strict_escalation() {
    let path = netlist_file("mz_active.net", MZ_ACTIVE);
    let p = path.to_str().unwrap();

    let out = run(&["simulate", "--netlist", p]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    // tau(0) = 0.99, so each detector sees (1 + 0.99^2)/4.
    let want = (1.0 + 0.99f64.powi(2)) / 4.0;
    for d in doc["detectors"].as_array().unwrap() {
        assert!((d["p"].as_f64().unwrap() - want).abs() < 1e-12);
    }
    assert!(doc["energy"]["residual"].as_f64().unwrap() < 1e-12);

    // The open splitter port is only a warning unless --strict.
    let out = run(&["simulate", "--netlist", p, "--strict"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn parse_error_reports_position() {
    let path = netlist_file("broken.net", "component X wizard\n");
    let out = run(&["simulate", "--netlist", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn modulate_finds_first_order_line() {
    let path = netlist_file("mz_mod.net", MZ_ACTIVE);
    let out = run(&[
        "modulate", "--netlist", path.to_str().unwrap(), "--samples", "512",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    let reports = doc["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2); // defaults to every detector
    let lines = reports[0]["lines"].as_array().unwrap();
    let at5 = lines
        .iter()
        .find(|l| (l["frequency"].as_f64().unwrap() - 5.0).abs() < 1e-9)
        .expect("5 Hz line");
    assert_eq!(at5["order"], serde_json::json!(1));
    assert_eq!(at5["combination"], serde_json::json!(["A1"]));
    let amp = at5["amplitude"].as_f64().unwrap();
    assert!((amp - 0.005).abs() < 1e-5, "5 Hz amplitude, got {amp}");
}

#[test]
fn modulate_rejects_bad_sampling_plans() {
    let path = netlist_file("mz_plan.net", MZ_ACTIVE);
    let p = path.to_str().unwrap();
    // 16 samples over 1 s cannot resolve third order at 5 Hz.
    let out = run(&["modulate", "--netlist", p, "--samples", "16"]);
    assert_eq!(code(&out), 1);
    // 0.3 s does not hold a whole number of 5 Hz periods.
    let out = run(&["modulate", "--netlist", p, "--samples", "512", "--duration", "0.3"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn scenario_runs_and_rejects_unknown_names() {
    let svg = tmpfile("fig5b.svg");
    let out = run(&[
        "scenario", "fig5b", "--samples", "256",
        "--svg", svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["scenario"], serde_json::json!("fig5b"));
    let dead = doc["series_max"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["target"] == serde_json::json!("e1_b"))
        .expect("e1_b entry");
    assert_eq!(dead["max"].as_f64().unwrap(), 0.0);
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let out = run(&["scenario", "bogus"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("available"));
}

#[test]
fn render_writes_svg() {
    let file = tmpfile("weak.svg");
    let out = run(&[
        "render", "--preset", "nested", "--quantity", "weak",
        "--post-select", "D2", "--out", file.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let svg = fs::read_to_string(&file).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.ends_with("</svg>\n"));

    // Backward/weak/encounter need a detector.
    let out = run(&["render", "--preset", "nested", "--quantity", "backward"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn presets_lists_names() {
    let out = run(&["presets"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    let names: Vec<&str> = doc["presets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["simple", "nested", "double_nested"]);
    assert_eq!(doc["scenarios"].as_array().unwrap().len(), 5);

    let out = run(&["presets", "--format", "csv"]);
    assert!(stdout(&out).starts_with("kind,name\n"));
}

#[test]
fn usage_errors_exit_1() {
    // No network chosen.
    assert_eq!(code(&run(&["simulate"])), 1);
    // Unknown flag.
    assert_eq!(code(&run(&["simulate", "--bogus"])), 1);
    // Unknown preset, with suggestions.
    let out = run(&["simulate", "--preset", "bogus"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("available"));
    // Unknown subcommand.
    assert_eq!(code(&run(&["frobnicate"])), 1);
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["simulate", "--help"])), 0);
}
