//! End-to-end tests of the binary: exit codes, file formats, numerical
//! values in the emitted artifacts, and byte-for-byte determinism.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasespace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 output")
}

/// Parse CSV: (meta key=value pairs, header, data rows).
fn parse_csv(text: &str) -> (Vec<(String, String)>, Vec<String>, Vec<Vec<String>>) {
    let mut meta = Vec::new();
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest.split_once('=').expect("meta line");
            meta.push((k.to_string(), v.to_string()));
        } else if header.is_empty() {
            header = line.split(',').map(str::to_string).collect();
        } else {
            rows.push(line.split(',').map(str::to_string).collect());
        }
    }
    (meta, header, rows)
}

fn meta_value<'a>(meta: &'a [(String, String)], key: &str) -> &'a str {
    meta.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .unwrap_or_else(|| panic!("missing meta key {key}"))
}

#[test]
fn table1_reproduces_fractions() {
    let out = run(&["table1", "--nmax", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (meta, header, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 4);
    assert_eq!(header[0], "n");
    let dev: f64 = meta_value(&meta, "max_abs_deviation").parse().unwrap();
    assert!(dev < 1e-8);
    // row n=1 decimals and fractions
    let row = &rows[1];
    let ebar: f64 = row[1].parse().unwrap();
    assert!((ebar - 1.5).abs() < 1e-10);
    assert_eq!(row[2], "3/2");
    let x2p2_b: f64 = row[11].parse().unwrap();
    assert!((x2p2_b - 1.25).abs() < 1e-10);
    assert_eq!(row[12], "5/4");
}

#[test]
fn table1_single_row() {
    let out = run(&["table1", "--nmax", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, _, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 1);
    let values: Vec<f64> = [1, 3, 5, 7, 9, 11, 13, 15]
        .iter()
        .map(|&i| rows[0][i].parse().unwrap())
        .collect();
    let expect = [0.5, 0.5, 0.5, 0.75, 0.25, 0.25, 0.25, 0.25];
    for (got, want) in values.iter().zip(&expect) {
        assert!((got - want).abs() < 1e-8);
    }
}

#[test]
fn table1_tolerance_gate_exits_2() {
    let out = run(&["table1", "--nmax", "3", "--tol", "1e-16"]);
    assert_eq!(out.status.code(), Some(2));
    // the artifact is still written, with the deviation report in the meta
    let (meta, _, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 4);
    assert!(meta.iter().any(|(k, _)| k == "max_abs_deviation"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["table1", "--nmax", "99"]).status.code(), Some(1));
    assert_eq!(run(&["table1", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    // explicit units demand all three scales, named in the message
    let out = run(&["table1", "--units", "explicit", "--m", "1.0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--omega") && err.contains("--hbar"), "{err}");
    // scale flags without explicit units are rejected
    assert_eq!(run(&["table1", "--m", "2.0"]).status.code(), Some(1));
}

#[test]
fn grid_rule_a_is_positive_with_peak_at_origin() {
    let out = run(&["grid", "--rule", "A", "--n", "0", "--nx", "65", "--np", "65"]);
    assert_eq!(out.status.code(), Some(0));
    let (meta, _, rows) = parse_csv(&stdout(&out));
    let norm: f64 = meta_value(&meta, "normalization").parse().unwrap();
    assert!((norm - 1.0).abs() < 1e-6);
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    for row in &rows {
        let x: f64 = row[0].parse().unwrap();
        let p: f64 = row[1].parse().unwrap();
        let f: f64 = row[2].parse().unwrap();
        assert!(f >= 0.0, "negative rule-A value at ({x}, {p})");
        let r = x * x + p * p;
        if r < best.0 {
            best = (r, x, p, f);
        }
    }
    assert!((best.3 - 1.0 / std::f64::consts::PI).abs() < 1e-8);
}

#[test]
fn grid_rule_b_is_negative_at_origin_for_n1() {
    let out = run(&["grid", "--rule", "B", "--n", "1", "--nx", "129", "--np", "129"]);
    assert_eq!(out.status.code(), Some(0));
    let (meta, _, rows) = parse_csv(&stdout(&out));
    let min: f64 = meta_value(&meta, "min").parse().unwrap();
    assert!((min + 1.0 / std::f64::consts::PI).abs() < 1e-6);
    let origin = rows
        .iter()
        .map(|row| {
            let x: f64 = row[0].parse().unwrap();
            let p: f64 = row[1].parse().unwrap();
            let f: f64 = row[2].parse().unwrap();
            (x * x + p * p, f)
        })
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap();
    assert!((origin.1 + 1.0 / std::f64::consts::PI).abs() < 1e-8);
}

#[test]
fn grid_rule_a_n2_figure_data() {
    let out = run(&["grid", "--rule", "A", "--n", "2", "--nx", "129", "--np", "129"]);
    assert_eq!(out.status.code(), Some(0));
    let (meta, _, _) = parse_csv(&stdout(&out));
    let norm: f64 = meta_value(&meta, "normalization").parse().unwrap();
    assert!((norm - 1.0).abs() < 1e-6);
    let min: f64 = meta_value(&meta, "min").parse().unwrap();
    let max: f64 = meta_value(&meta, "max").parse().unwrap();
    assert!(min >= -1e-15 * max);
}

#[test]
fn moments_both_rules_at_n1() {
    let out = run(&["moments", "--n", "1", "--nx", "2", "--mp", "2", "--rule", "both"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, _, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 2);
    let a: f64 = rows[0][3].parse().unwrap();
    let b: f64 = rows[1][3].parse().unwrap();
    assert!((a - 2.25).abs() < 1e-6, "rule A: {a}");
    assert!((b - 1.25).abs() < 1e-6, "rule B: {b}");
}

#[test]
fn moments_rejects_high_power() {
    let out = run(&["moments", "--nx", "5", "--mp", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--nx"));
}

#[test]
fn ehrenfest_stationary_contract() {
    let out = run(&[
        "ehrenfest", "--x0", "0", "--p0", "0", "--dt", "1e-3", "--steps", "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (meta, _, rows) = parse_csv(&stdout(&out));
    assert_eq!(meta_value(&meta, "contract"), "stationary");
    assert_eq!(rows.len(), 21);
}

#[test]
fn ehrenfest_quartic_contract() {
    let out = run(&[
        "ehrenfest", "--potential", "quartic", "--lambda", "0.1", "--x0", "1",
        "--dt", "1e-3", "--steps", "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (meta, _, _) = parse_csv(&stdout(&out));
    assert_eq!(meta_value(&meta, "contract"), "quartic-momentum-relation");
    let p_res: f64 = meta_value(&meta, "max_residual_ehrenfest_p").parse().unwrap();
    assert!(p_res < 1e-5);
}

#[test]
fn cohen_ground_state_passes_and_n1_trips_coverage_gate() {
    let out = run(&["cohen", "--n", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let (meta, _, rows) = parse_csv(&stdout(&out));
    let coverage: f64 = meta_value(&meta, "coverage").parse().unwrap();
    assert!(coverage > 0.99);
    let dev: f64 = meta_value(&meta, "roundtrip_max_deviation").parse().unwrap();
    assert!(dev < 1e-5);
    assert_eq!(rows.len(), 129 * 129);

    let out = run(&["cohen", "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let (meta, _, _) = parse_csv(&stdout(&out));
    let coverage: f64 = meta_value(&meta, "coverage").parse().unwrap();
    assert!(coverage < 1.0 && coverage > 0.9, "coverage {coverage}");
}

#[test]
fn cohen_unity_kernel_matches_rule_b() {
    let out = run(&["cohen", "--n", "1", "--kernel", "unity"]);
    assert_eq!(out.status.code(), Some(0));
    let (meta, _, _) = parse_csv(&stdout(&out));
    assert_eq!(meta_value(&meta, "roundtrip_reference_rule"), "B");
    let dev: f64 = meta_value(&meta, "roundtrip_max_deviation").parse().unwrap();
    assert!(dev < 1e-5, "{dev}");
}

#[test]
fn verify_subset_runs_clean() {
    let out = run(&["verify", "--only", "specfun"]);
    assert_eq!(out.status.code(), Some(0));
    let (meta, header, rows) = parse_csv(&stdout(&out));
    assert_eq!(meta_value(&meta, "failed"), "0");
    assert_eq!(header, ["check", "status", "detail"]);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[1] == "pass"));
}

#[test]
fn verify_rejects_unknown_filter() {
    let out = run(&["verify", "--only", "no-such-check"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    for args in [
        vec!["verify", "--only", "moments/lateral-agreement", "--seed", "7"],
        vec!["ehrenfest", "--x0", "1", "--dt", "1e-3", "--steps", "10"],
        vec!["table1", "--nmax", "2", "--format", "json"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.status.code(), b.status.code());
        assert_eq!(a.stdout, b.stdout, "non-deterministic output for {args:?}");
    }
}

#[test]
fn json_format_parses_with_meta_and_rows() {
    let out = run(&["table1", "--nmax", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["meta"]["command"], "table1");
    assert_eq!(doc["data"]["rows"].as_array().unwrap().len(), 2);
    let ebar = doc["data"]["rows"][1][1].as_f64().unwrap();
    assert!((ebar - 1.5).abs() < 1e-10);
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join("phasespace-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("table.csv");
    let out = run(&["table1", "--nmax", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# command=table1"));
    std::fs::remove_file(&path).unwrap();
}
