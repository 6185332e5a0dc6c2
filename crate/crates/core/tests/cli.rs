use std::path::Path;
use std::process::{Command, Output};

use cavity_bistability::io::{read_trace, read_trajectory};

fn bistability(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bistability"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn value(report: &str, key: &str) -> f64 {
    let table: toml::Table = report.parse().expect("toml report");
    table[key].as_float().expect("float value")
}

#[test]
fn scan_then_fit_recovers_config_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[model]\na_param = 16\ns_param = 9\n[scan]\nstart_norm = -10\nend_norm = 25\npoints = 351\n",
    )
    .unwrap();
    let config = config.to_str().unwrap();

    let scan = bistability(&["--config", config, "scan"], dir.path());
    assert!(scan.status.success(), "{scan:?}");
    let up = dir.path().join("scan_increasing.csv");
    let down = dir.path().join("scan_decreasing.csv");
    assert_eq!(read_trace(&up).unwrap().len(), 351);

    let fit = bistability(
        &[
            "--config",
            config,
            "fit",
            "--increasing",
            up.to_str().unwrap(),
            "--decreasing",
            down.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(fit.status.success(), "{fit:?}");
    let report = std::fs::read_to_string(dir.path().join("fit.toml")).unwrap();
    assert_eq!(report, stdout(&fit));
    assert!(
        ((value(&report, "a_est") - 16.0) / 16.0).abs() < 1e-4,
        "{report}"
    );
    assert!(
        ((value(&report, "s_est") - 9.0) / 9.0).abs() < 1e-4,
        "{report}"
    );
    assert!(report.contains("converged = true"));
}

#[test]
fn fixed_step_dynamics_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "dynamics",
        "--a",
        "16",
        "--s",
        "9",
        "--chirp-start",
        "10",
        "--chirp-end",
        "0",
        "--duration-s",
        "2e-4",
        "--fixed-step",
    ];
    let first_dir = dir.path().join("first");
    let second_dir = dir.path().join("second");
    assert!(bistability(&args, &first_dir).status.success());
    assert!(bistability(&args, &second_dir).status.success());
    let first = std::fs::read(first_dir.join("trajectory.csv")).unwrap();
    let second = std::fs::read(second_dir.join("trajectory.csv")).unwrap();
    assert_eq!(first, second);

    let table = read_trajectory(&first_dir.join("trajectory.csv")).unwrap();
    assert_eq!(table.len(), 401);
    assert_eq!(table.detunings[0], 10.0);
    assert!(table.detunings.last().unwrap().abs() < 1e-12);
}

#[test]
fn noisy_scans_follow_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let res = bistability(
            &[
                "--seed",
                seed,
                "scan",
                "--a",
                "16",
                "--s",
                "9",
                "--noise",
                "0.02",
                "--direction",
                "increasing",
            ],
            &out,
        );
        assert!(res.status.success(), "{res:?}");
        assert!(!out.join("scan_decreasing.csv").exists());
        std::fs::read(out.join("scan_increasing.csv")).unwrap()
    };
    assert_eq!(run("7", "a"), run("7", "b"));
    assert_ne!(run("7", "a"), run("8", "c"));
}

#[test]
fn spectrogram_from_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let dynamics = bistability(
        &[
            "dynamics",
            "--a",
            "16",
            "--s",
            "9",
            "--detuning",
            "15",
            "--duration-s",
            "2e-3",
        ],
        dir.path(),
    );
    assert!(dynamics.status.success(), "{dynamics:?}");
    let trajectory = dir.path().join("trajectory.csv");
    let spec = bistability(
        &["spectrogram", "--input", trajectory.to_str().unwrap()],
        dir.path(),
    );
    assert!(spec.status.success(), "{spec:?}");
    let text = std::fs::read_to_string(dir.path().join("spectrogram.csv")).unwrap();
    let rows = text.lines().count() - 1;
    // 4001 samples, 256-sample sections every 128: 30 sections of 129 bins
    assert_eq!(text.lines().next(), Some("time_s,freq_hz,magnitude"));
    assert_eq!(rows, 30 * 129);
    let dominant = std::fs::read_to_string(dir.path().join("dominant_frequency.csv")).unwrap();
    assert_eq!(dominant.lines().count(), 31);
}

#[test]
fn params_and_region_print_key_values() {
    let dir = tempfile::tempdir().unwrap();
    let params = bistability(&["params"], dir.path());
    assert!(params.status.success());
    let text = stdout(&params);
    assert!((value(&text, "a_param") - 21.43).abs() < 0.01, "{text}");
    assert!((value(&text, "s_param") - 12.0).abs() < 1e-6, "{text}");

    let region = bistability(&["region", "--a", "16", "--s", "9"], dir.path());
    let text = stdout(&region);
    assert!((value(&text, "lower_norm") - 1.0).abs() < 0.5, "{text}");
    assert!((value(&text, "upper_norm") - 7.0).abs() < 0.5, "{text}");

    let none = bistability(&["region", "--a", "0", "--s", "9"], dir.path());
    assert!(none.status.success());
    assert!(stdout(&none).starts_with('#'));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[physical]\nwaist = 9e-5\n").unwrap();
    let out = bistability(&["--config", bad.to_str().unwrap(), "params"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("waist_m"));

    let both = dir.path().join("both.toml");
    std::fs::write(&both, "[physical]\nn_atoms = 1e5\n[model]\na_param = 3\n").unwrap();
    let out = bistability(&["--config", both.to_str().unwrap(), "params"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let missing = bistability(
        &[
            "fit",
            "--increasing",
            "/nonexistent/up.csv",
            "--decreasing",
            "/nonexistent/down.csv",
        ],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(2));

    let overflow = bistability(
        &["steady", "--a", "1e300", "--s", "1", "--detuning", "0"],
        dir.path(),
    );
    assert_eq!(overflow.status.code(), Some(3));

    let coarse = bistability(&["scan", "--points", "11"], dir.path());
    assert_eq!(coarse.status.code(), Some(2));
}
