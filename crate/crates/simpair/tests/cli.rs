use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn simpair(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simpair"))
        .args(args)
        .current_dir(dir)
        .env_remove("SIMPAIR_JOBS")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = simpair(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn sessions(dir: &Path, n: &str, seed: &str) {
    ok(dir, &["synth", "--kind", "sessions", "--n-sessions", n, "--seed", seed, "--out", "s.csv"]);
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let first = ok(d, &["synth", "--kind", "sessions", "--n-sessions", "1000", "--seed", "7", "--out", "a.csv"]);
    ok(d, &["synth", "--kind", "sessions", "--n-sessions", "1000", "--seed", "7", "--out", "b.csv"]);
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
    let rows = fs::read_to_string(d.join("a.csv")).unwrap().lines().count() - 1;
    assert_eq!(first.trim(), format!("wrote {rows} rows to a.csv"));

    ok(d, &["synth", "--kind", "sessions", "--n-sessions", "1000", "--seed", "8", "--out", "c.csv"]);
    assert_ne!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("c.csv")).unwrap());
}

#[test]
fn synth_rejects_bad_parameters() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = simpair(d, &["synth", "--kind", "sessions", "--p-continue", "1.5", "--out", "x.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("p_continue"));
    assert!(!d.join("x.csv").exists());

    let out = simpair(d, &["synth", "--kind", "null", "--n-sessions", "5", "--out", "x.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--n-sessions"));

    let out = simpair(d, &["synth", "--kind", "null", "--rows", "0", "--out", "x.csv"]);
    assert_eq!(code(&out), 2);
    let out = simpair(d, &["synth", "--kind", "weird", "--out", "x.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn synth_kinds_write_expected_columns() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cases: [(&[&str], &str); 4] = [
        (&["--kind", "sessions", "--n-sessions", "50"], "position,session_length,accepted"),
        (&["--kind", "reversal", "--n-per-group", "20", "--centers", "0,-3", "--offsets", "1,-1"], "x_p,group,outcome"),
        (&["--kind", "null", "--rows", "30", "--n-vars", "4"], "x1,x2,x3,x4,outcome"),
        (&["--kind", "majority-mask", "--rows", "40"], "x_p,x_c,outcome"),
    ];
    for (args, header) in cases {
        let mut all = vec!["synth"];
        all.extend_from_slice(args);
        all.extend_from_slice(&["--out", "k.csv"]);
        ok(d, &all);
        let text = fs::read_to_string(d.join("k.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), header);
    }
    let text = fs::read_to_string(d.join("k.csv")).unwrap();
    assert_eq!(text.lines().count(), 41);
}

#[test]
fn scan_flags_the_session_reversal() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    sessions(d, "100000", "3");
    let stdout = ok(d, &["scan", "--input", "s.csv", "--outcome", "accepted"]);
    assert!(stdout.starts_with("position | session_length: reversal"), "{stdout}");

    let report = read_json(&d.join("scan_report.json"));
    let findings = report["findings"].as_array().unwrap();
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0]["x_p"], "position");
    assert_eq!(findings[0]["x_c"], "session_length");
    assert_eq!(findings[0]["classification"], "reversal");
    assert_eq!(findings[0]["aggregate_sign"], 1);
    assert_eq!(report["all_pairs"].as_array().unwrap().len(), 2);
    assert_eq!(report["dataset"]["outcome"], "accepted");
}

#[test]
fn majority_mask_default_is_flagged_end_to_end() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "majority-mask", "--out", "m.csv"]);
    let stdout = ok(d, &["scan", "--input", "m.csv", "--outcome", "outcome", "--out", "m.json"]);
    assert!(stdout.contains("x_p | x_c: reversal"), "{stdout}");
    let report = read_json(&d.join("m.json"));
    let flagged: Vec<(&str, &str)> = report["findings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["x_p"].as_str().unwrap(), f["x_c"].as_str().unwrap()))
        .collect();
    assert!(flagged.contains(&("x_p", "x_c")));
}

#[test]
fn scan_rejects_bad_flags_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    sessions(d, "200", "1");
    let base = ["scan", "--input", "s.csv", "--outcome", "accepted"];
    let bad: [&[&str]; 7] = [
        &["--threshold", "1.5"],
        &["--threshold", "0"],
        &["--bins", "bogus:3"],
        &["--bins", "quantile:1"],
        &["--bins-for", "position"],
        &["--model", "probit"],
        &["--jobs", "0"],
    ];
    for extra in bad {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        let out = simpair(d, &args);
        assert_eq!(code(&out), 2, "{extra:?}: {}", stderr(&out));
    }
    let mut args = base.to_vec();
    args.extend_from_slice(&["--threshold", "1.5"]);
    assert!(stderr(&simpair(d, &args)).contains("threshold"));
    let mut args = base.to_vec();
    args.extend_from_slice(&["--vars", "position,position"]);
    assert_eq!(code(&simpair(d, &args)), 2);
    assert!(!d.join("scan_report.json").exists());
}

#[test]
fn scan_reports_data_errors_with_exit_3() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    sessions(d, "200", "1");
    let out = simpair(d, &["scan", "--input", "s.csv", "--outcome", "nope"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("nope"));

    let out = simpair(d, &["scan", "--input", "s.csv", "--outcome", "accepted", "--vars", "position,ghost"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("ghost"));

    let out = simpair(d, &["scan", "--input", "absent.csv", "--outcome", "accepted"]);
    assert_eq!(code(&out), 3);

    // Logistic model on a non-binary outcome.
    let out = simpair(d, &["scan", "--input", "s.csv", "--outcome", "position", "--vars", "session_length,accepted"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("position"));
}

#[test]
fn scan_options_reach_the_report() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    sessions(d, "5000", "2");
    ok(
        d,
        &[
            "scan",
            "--input",
            "s.csv",
            "--outcome",
            "accepted",
            "--vars",
            "session_length,position",
            "--threshold",
            "0.01",
            "--bins",
            "width:4",
            "--bins-for",
            "session_length=distinct",
            "--min-bin-rows",
            "50",
            "--out",
            "r.json",
        ],
    );
    let r = read_json(&d.join("r.json"));
    assert_eq!(r["config"]["threshold"], 0.01);
    assert_eq!(r["config"]["default_bins"], "width:4");
    assert_eq!(r["config"]["bin_overrides"]["session_length"], "distinct");
    assert_eq!(r["config"]["min_bin_rows"], 50);
    assert_eq!(r["config"]["vars"], serde_json::json!(["session_length", "position"]));
    let pairs = r["all_pairs"].as_array().unwrap();
    let by_xc = |xc: &str| pairs.iter().find(|p| p["x_c"] == xc).unwrap();
    assert_eq!(by_xc("position")["bin_spec"]["strategy"], "equal_width");
    assert_eq!(by_xc("position")["bin_spec"]["bin_count"], 4);
    assert_eq!(by_xc("session_length")["bin_spec"]["strategy"], "distinct_values");
    assert_eq!(by_xc("session_length")["bin_spec"]["min_bin_rows"], 50);
}

#[test]
fn linear_model_scans_a_continuous_outcome() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let mut text = String::from("x,g,y\n");
    for i in 0..600 {
        let g = i % 3;
        let x = (i / 3) as f64 / 100.0 + 5.0 * g as f64;
        let y = 0.5 * x - 6.0 * g as f64 + ((i * 7919) % 13) as f64 / 13.0;
        text.push_str(&format!("{x},{g},{y}\n"));
    }
    fs::write(d.join("lin.csv"), text).unwrap();
    ok(d, &["scan", "--input", "lin.csv", "--outcome", "y", "--model", "linear", "--out", "lin.json"]);
    let r = read_json(&d.join("lin.json"));
    assert_eq!(r["config"]["model"], "linear");
    let e = r["all_pairs"].as_array().unwrap().iter().find(|p| p["x_p"] == "x").unwrap();
    assert_eq!(e["aggregate_sign"], -1);
    assert_eq!(e["disagg_sign"], 1);
    assert_eq!(e["classification"], "reversal");
}

#[test]
fn csv_format_writes_flat_rows_to_default_path() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    sessions(d, "3000", "5");
    ok(d, &["scan", "--input", "s.csv", "--outcome", "accepted", "--format", "csv"]);
    let text = fs::read_to_string(d.join("scan_report.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x_p,x_c,is_paradox,classification,bin_spec,aggregate_beta,aggregate_p,aggregate_sign,mean_disagg_sign,disagg_sign,valid_bins,skipped_bins,dependence_pc,spread,error"
    );
    assert_eq!(lines.count(), 2);
    assert!(!d.join("scan_report.json").exists());
}

#[test]
fn findings_are_identical_across_job_counts() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "null", "--rows", "4000", "--n-vars", "4", "--seed", "9", "--out", "n.csv"]);
    let mut reports = Vec::new();
    for jobs in ["1", "2", "5"] {
        let out = format!("r{jobs}.json");
        ok(d, &["scan", "--input", "n.csv", "--outcome", "outcome", "--jobs", jobs, "--out", &out]);
        let r = read_json(&d.join(&out));
        assert_eq!(r["timing"]["jobs"], jobs.parse::<u64>().unwrap());
        reports.push(r);
    }
    for r in &reports[1..] {
        assert_eq!(r["all_pairs"], reports[0]["all_pairs"]);
        assert_eq!(r["findings"], reports[0]["findings"]);
        assert_eq!(r["dataset"], reports[0]["dataset"]);
    }
    assert_eq!(reports[0]["all_pairs"].as_array().unwrap().len(), 12);
}

#[test]
fn jobs_environment_variable_is_a_default() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    sessions(d, "300", "1");
    let run = |extra: &[&str]| {
        let mut args = vec!["scan", "--input", "s.csv", "--outcome", "accepted", "--out", "j.json"];
        args.extend_from_slice(extra);
        let out = Command::new(env!("CARGO_BIN_EXE_simpair"))
            .args(&args)
            .current_dir(d)
            .env("SIMPAIR_JOBS", "3")
            .output()
            .unwrap();
        assert!(out.status.success());
        read_json(&d.join("j.json"))["timing"]["jobs"].as_u64().unwrap()
    };
    assert_eq!(run(&[]), 3);
    assert_eq!(run(&["--jobs", "2"]), 2);
}

#[test]
fn diagnose_reports_conditions_and_mixture_gap() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    sessions(d, "20000", "6");
    let text = ok(d, &["diagnose", "--input", "s.csv", "--outcome", "accepted", "--xp", "position", "--xc", "session_length"]);
    assert!(text.contains("condition1_met: true"), "{text}");
    assert!(text.contains("condition2_met: true"), "{text}");
    let gap_line = text.lines().find(|l| l.starts_with("mixture_identity_deviation")).unwrap();
    let gap: f64 = gap_line.split(": ").nth(1).unwrap().parse().unwrap();
    assert!(gap <= 1e-12);

    let json = ok(
        d,
        &["diagnose", "--input", "s.csv", "--outcome", "accepted", "--xp", "position", "--xc", "session_length", "--json"],
    );
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["condition1_met"], true);
    assert!(v["dependence_pc"].as_f64().unwrap() > 0.5);
}

#[test]
fn diagnose_independent_columns_and_high_cardinality() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "null", "--rows", "20000", "--n-vars", "2", "--seed", "1", "--out", "n.csv"]);
    let text = ok(d, &["diagnose", "--input", "n.csv", "--outcome", "outcome", "--xp", "x1", "--xc", "x2"]);
    assert!(text.contains("condition1_met: false"), "{text}");
    assert!(text.contains("mixture_identity_deviation: n/a"), "{text}");
}

#[test]
fn diagnose_rejects_identical_and_unknown_variables() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let mut text = String::from("a,b,y\n");
    for i in 0..300 {
        text.push_str(&format!("{},{},{}\n", i % 17, i % 17, i % 2));
    }
    fs::write(d.join("c.csv"), text).unwrap();
    let out = simpair(d, &["diagnose", "--input", "c.csv", "--outcome", "y", "--xp", "a", "--xc", "b"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("identical"), "{}", stderr(&out));
    let out = simpair(d, &["diagnose", "--input", "c.csv", "--outcome", "y", "--xp", "a", "--xc", "a"]);
    assert_eq!(code(&out), 2);
    let out = simpair(d, &["diagnose", "--input", "c.csv", "--outcome", "y", "--xp", "a", "--xc", "zz"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("zz"));
}

#[test]
fn plot_data_flag_writes_curves() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    sessions(d, "5000", "4");
    ok(d, &["scan", "--input", "s.csv", "--outcome", "accepted", "--plot-data", "plot.csv"]);
    let text = fs::read_to_string(d.join("plot.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "pair_id,x_p,x_c,curve_type,bin_label,x,fitted,empirical,n");
    assert!(text.lines().any(|l| l.starts_with("position|session_length,position,session_length,aggregate,,")));
}
