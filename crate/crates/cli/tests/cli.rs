//! End-to-end tests driving the compiled `cfm` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfm"))
        .args(args)
        .output()
        .expect("failed to spawn cfm")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

/// Extracts the number following `key = ` on the last matching stdout line.
fn value_after(out: &Output, key: &str) -> f64 {
    let text = stdout(out);
    let line = text
        .lines()
        .filter(|l| l.starts_with(key))
        .next_back()
        .unwrap_or_else(|| panic!("no '{key}' line in output:\n{text}"));
    line.trim_start_matches(key)
        .trim_start_matches(" = ")
        .split_whitespace()
        .next()
        .expect("value after key")
        .parse()
        .expect("numeric value")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory")
}

fn ur10e_model() -> String {
    fixtures().join("ur10e.model").to_str().unwrap().to_string()
}

#[test]
fn help_screens_exist_for_every_subcommand() {
    let top = cfm(&["--help"]);
    assert!(top.status.success());
    let text = stdout(&top);
    let subcommands = [
        "fit",
        "fit2d",
        "predict",
        "safe-speed",
        "force-map",
        "speed-map",
        "effmass",
        "baseline",
        "evaluate",
        "compare",
        "synth",
    ];
    for name in subcommands {
        assert!(text.contains(name), "--help does not mention {name}");
        let sub = cfm(&[name, "--help"]);
        assert!(sub.status.success(), "{name} --help failed");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cfm(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        cfm(&["predict", "--no-such-flag", "1"]).status.code(),
        Some(2)
    );
    // Missing required flags is also a usage error.
    assert_eq!(cfm(&["safe-speed"]).status.code(), Some(2));
}

#[test]
fn missing_model_file_exits_1_with_message() {
    let out = cfm(&[
        "predict", "--model", "missing.file", "-d", "0.8", "-H", "0.4", "-v", "0.2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.file"));
    assert!(stderr(&out).contains("failed to open model file"));
}

#[test]
fn pfl_baseline_reproduces_published_speeds() {
    for (fmax, mr, expected) in [
        ("140", "15", 0.13),
        ("140", "10", 0.16),
        ("280", "15", 0.26),
        ("280", "10", 0.32),
    ] {
        let out = cfm(&[
            "baseline", "pfl", "--fmax", fmax, "--k", "75000", "--mr", mr, "--mh", "inf",
        ]);
        assert!(out.status.success());
        let v = value_after(&out, "velocity_mps");
        assert!(
            (v - expected).abs() <= 0.005,
            "fmax={fmax} mr={mr}: got {v}, expected {expected}"
        );
    }
}

#[test]
fn pfl_force_inverts_pfl_speed() {
    let speed = cfm(&["baseline", "pfl", "--fmax", "140", "--mr", "15", "--mh", "20"]);
    let v = value_after(&speed, "velocity_mps");
    let force = cfm(&[
        "baseline",
        "pfl-force",
        "-v",
        &format!("{v}"),
        "--mr",
        "15",
        "--mh",
        "20",
    ]);
    let f = value_after(&force, "force_n");
    assert!((f - 140.0).abs() < 1e-3, "round trip gave {f} N");
}

#[test]
fn safe_speed_matches_published_ur10e_value() {
    let out = cfm(&[
        "safe-speed",
        "--model",
        &ur10e_model(),
        "-d",
        "0.8",
        "-H",
        "0.4",
        "--fmax",
        "140",
        "--margin",
        "1.0",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let v = value_after(&out, "velocity_mps");
    assert!((v - 0.16).abs() <= 0.01, "safe speed {v} not near 0.16");
}

#[test]
fn predict_hits_published_force_levels() {
    for (v, expected) in [("0.16", 140.0), ("0.36", 280.0)] {
        let out = cfm(&[
            "predict", "--model", &ur10e_model(), "-d", "0.8", "-H", "0.4", "-v", v,
        ]);
        assert!(out.status.success());
        let f = value_after(&out, "force_n");
        assert!(
            (f - expected).abs() <= 0.05 * expected,
            "v={v}: force {f} outside {expected} +- 5%"
        );
    }
}

#[test]
fn model_label_selection_works() {
    let models = fixtures().join("reference.models");
    let path = models.to_str().unwrap();
    // Multiple models without a label is an operation error naming the labels.
    let ambiguous = cfm(&["predict", "--model", path, "-d", "0.8", "-H", "0.4", "-v", "0.2"]);
    assert_eq!(ambiguous.status.code(), Some(1));
    assert!(stderr(&ambiguous).contains("kuka-10nm"));

    let out = cfm(&[
        "predict", "--model", path, "--label", "kuka-10nm", "-d", "0.8", "-H", "0.4", "-v",
        "0.20",
    ]);
    assert!(out.status.success());
    let f = value_after(&out, "force_n");
    assert!(f <= 147.0, "kuka-10nm at 0.20 m/s gave {f} N");
}

#[test]
fn synth_is_deterministic_and_seed_sensitive() {
    let a = cfm(&[
        "synth", "--model", &ur10e_model(), "--noise", "1.5", "--reps", "2", "--seed", "42",
    ]);
    let b = cfm(&[
        "synth", "--model", &ur10e_model(), "--noise", "1.5", "--reps", "2", "--seed", "42",
    ]);
    let c = cfm(&[
        "synth", "--model", &ur10e_model(), "--noise", "1.5", "--reps", "2", "--seed", "43",
    ]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b), "same seed must give identical bytes");
    assert_ne!(stdout(&a), stdout(&c), "different seeds must differ");
}

#[test]
fn synth_fit_round_trip_recovers_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.csv");
    let refit = dir.path().join("refit.model");

    let synth = cfm(&[
        "synth",
        "--model",
        &ur10e_model(),
        "--noise",
        "0",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(synth.status.success(), "stderr: {}", stderr(&synth));

    let fit = cfm(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--out",
        refit.to_str().unwrap(),
    ]);
    assert!(fit.status.success(), "stderr: {}", stderr(&fit));

    let original: Vec<cfm_core::fitting::CfmModel> =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("ur10e.model")).unwrap())
            .unwrap();
    let refitted: Vec<cfm_core::fitting::CfmModel> =
        serde_json::from_str(&std::fs::read_to_string(&refit).unwrap()).unwrap();
    assert_eq!(refitted.len(), 1);
    assert_eq!(refitted[0].terms, original[0].terms);
    for (a, b) in refitted[0]
        .coefficients
        .iter()
        .zip(&original[0].coefficients)
    {
        assert!(
            (a - b).abs() <= 1e-6 * b.abs().max(1.0),
            "coefficient drift: {a} vs {b}"
        );
    }
}

#[test]
fn fit_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.csv");
    let synth = cfm(&[
        "synth",
        "--model",
        &ur10e_model(),
        "--noise",
        "1.12",
        "--reps",
        "3",
        "--d-steps",
        "3",
        "--h-steps",
        "3",
        "--v-steps",
        "3",
        "--seed",
        "7",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(synth.status.success());
    let first = cfm(&["fit", "--data", data.to_str().unwrap()]);
    let second = cfm(&["fit", "--data", data.to_str().unwrap()]);
    assert!(first.status.success());
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn force_map_csv_shape_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("map.csv");
    let out = cfm(&[
        "force-map",
        "--model",
        &ur10e_model(),
        "-v",
        "0.3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty(), "--out should leave stdout empty");
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "distance_m,height_m,value_n,flag");
    assert_eq!(lines.len(), 1 + 5 * 5, "default grid is 5x5");
}

#[test]
fn speed_map_grid_format_marks_infeasible_cells() {
    let out = cfm(&[
        "speed-map",
        "--model",
        &ur10e_model(),
        "--fmax",
        "140",
        "--margin",
        "1.0",
        "--d-steps",
        "3",
        "--h-steps",
        "3",
        "--format",
        "grid",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("safe speed map"));
    // Close to the base at low height the zero-speed force already exceeds
    // 140 N, so that cell must be flagged infeasible.
    assert!(text.contains('!'), "expected an infeasible cell:\n{text}");
}

#[test]
fn effmass_point_query_and_conflicts() {
    let out = cfm(&["effmass", "-d", "0.65", "-H", "0.25"]);
    assert!(out.status.success());
    let m = value_after(&out, "effective_mass_kg");
    assert!((m - 5.55160636).abs() < 1e-6, "effective mass {m}");

    let q_out = cfm(&["effmass", "--q", "0,0,0"]);
    assert!(q_out.status.success());
    let stretched = value_after(&q_out, "effective_mass_kg");
    assert!((stretched - 1.16161616).abs() < 1e-6, "got {stretched}");

    // --q and -d/-H are mutually exclusive at parse time.
    assert_eq!(
        cfm(&["effmass", "--q", "0,0,0", "-d", "0.6", "-H", "0.2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn effmass_map_covers_unreachable_cells() {
    let out = cfm(&[
        "effmass", "--map", "--d-min", "0.5", "--d-max", "1.2", "--d-steps", "3", "--format",
        "grid",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains('x'),
        "d = 1.2 m is beyond reach, expected an x cell:\n{text}"
    );
}

#[test]
fn evaluate_and_compare_report_errors() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    let test = dir.path().join("test.csv");
    for (path, seed, reps, steps) in [(&train, "7", "3", "3"), (&test, "11", "1", "5")] {
        let out = cfm(&[
            "synth",
            "--model",
            &ur10e_model(),
            "--noise",
            "1.12",
            "--reps",
            reps,
            "--d-steps",
            steps,
            "--h-steps",
            steps,
            "--v-steps",
            steps,
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let fit = cfm(&["fit", "--data", train.to_str().unwrap()]);
    assert!(fit.status.success());
    let model_path = dir.path().join("refit.model");
    std::fs::write(&model_path, stdout(&fit)).unwrap();

    let eval = cfm(&[
        "evaluate",
        "--model",
        model_path.to_str().unwrap(),
        "--data",
        test.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(eval.status.success());
    let eval_text = stdout(&eval);
    assert!(eval_text.starts_with("name,max_ue_pct,max_ue_n"));
    assert_eq!(eval_text.lines().count(), 2);

    let cmp = cfm(&[
        "compare",
        "--model",
        model_path.to_str().unwrap(),
        "--data",
        test.to_str().unwrap(),
        "--train",
        train.to_str().unwrap(),
        "--mr",
        "15",
        "--mh",
        "inf",
    ]);
    assert!(cmp.status.success(), "stderr: {}", stderr(&cmp));
    let table = stdout(&cmp);
    assert!(table.contains("per-height-2d"));
    assert!(table.contains("pfl"));
    assert!(
        table.contains('<'),
        "baselines should be worse somewhere:\n{table}"
    );
}
