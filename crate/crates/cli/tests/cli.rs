use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn xoit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xoit")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV written by the CLI, skipping `#` lines and the header.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn nuclides_lists_the_table() {
    let o = xoit(&["nuclides", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = doc["nuclides"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    let expected = [("45Sc", 1.58), ("67Zn", 11.87), ("73Ge", 1.69), ("157Gd", 8.13), ("181Ta", 0.79), ("229Th", 9.92e-4)];
    for (row, (name, eta_e5)) in rows.iter().zip(expected) {
        assert_eq!(row["name"], name);
        let eta = row["eta"].as_f64().unwrap() * 1e5;
        assert!((eta / eta_e5 - 1.0).abs() < 0.01, "{name}: {eta}");
    }
}

#[test]
fn single_nuclide_row() {
    let o = xoit(&["nuclides", "--nuclide", "67zn", "--format", "csv"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "67Zn");
    assert_eq!(rows[0].last().unwrap(), "valid");
}

#[test]
fn unknown_nuclide_suggests_names() {
    let o = xoit(&["nuclides", "--nuclide", "57Fe"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("57Fe") && err.contains("67Zn") && err.contains("229Th"), "{err}");
}

#[test]
fn bad_nuclides_file_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, "[{\"name\": \"x\",\n \"energy_eV\": }]").unwrap();
    let o = xoit(&["nuclides", "--nuclides-file", path(&f)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn custom_nuclides_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("fe.json");
    std::fs::write(&f, r#"[{"name": "57Fe", "energy_eV": 14412.5, "gamma_MHz": 1.13}]"#).unwrap();
    let o = xoit(&["nuclides", "--nuclides-file", path(&f), "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(csv_rows(&stdout(&o))[0][0], "57Fe");
}

fn summary_contrast(text: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with("dip:")).expect("dip line");
    let tail = line.split("contrast = ").nth(1).unwrap();
    tail.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn laser_off_has_no_dip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = xoit(&["spectrum", "--nuclide", "67Zn", "--n", "5e6", "--power-nw", "0", "--output", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(summary_contrast(&stdout(&o)), 0.0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# resolved: {"));
    assert_eq!(csv_rows(&text).len(), 10_001);
    // several sidebands are listed in the peak table
    assert!(stdout(&o).contains("peaks (5)"), "{}", stdout(&o));
}

#[test]
fn two_nanowatts_opens_a_dip() {
    let o = xoit(&["spectrum", "--power-nw", "2", "--grid-points", "201", "--format", "json"]);
    assert!(o.status.success());
    assert!(summary_contrast(&stderr(&o)) > 0.5);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["points"].as_array().unwrap().len(), 201);
    assert_eq!(doc["provenance"]["config"]["power_w"].as_f64(), Some(2e-9));
    assert!(doc["provenance"]["derived"]["g"].as_f64().unwrap() > 0.0);
}

#[test]
fn normalized_reference_peak_is_one() {
    let o = xoit(&["spectrum", "--normalize", "--grid-points", "101", "--format", "json"]);
    assert!(o.status.success());
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let center = doc["points"].as_array().unwrap().iter().find(|p| p["delta"].as_f64() == Some(0.0)).unwrap();
    assert!((center["absorption"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for f in [&a, &b] {
        let o = xoit(&["spectrum", "--power-nw", "3", "--grid-points", "301", "--format", "json", "--output", path(f)]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"power_nw": 1.0, "n": 7e5, "grid_points": 51}"#).unwrap();
    let o = xoit(&["spectrum", "--config", path(&cfg), "--power-nw", "2", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["provenance"]["config"]["power_w"].as_f64(), Some(2e-9));
    assert_eq!(doc["provenance"]["config"]["n"].as_u64(), Some(700_000));
    assert_eq!(doc["points"].as_array().unwrap().len(), 51);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"power": 1.0}"#).unwrap();
    let o = xoit(&["spectrum", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("power"));
}

#[test]
fn conflicting_couplings_are_rejected() {
    let o = xoit(&["spectrum", "--power-nw", "2", "--coupling-g-hz-2pi", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn direct_coupling_sets_g() {
    let o = xoit(&["spectrum", "--coupling-g-hz-2pi", "100", "--grid-points", "11", "--format", "json"]);
    assert!(o.status.success());
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let g = doc["provenance"]["derived"]["g"].as_f64().unwrap();
    assert!((g / (std::f64::consts::TAU * 100.0) - 1.0).abs() < 1e-12);
}

#[test]
fn negative_mass_is_invalid_physics() {
    let o = xoit(&["spectrum", "--mass-ug", "-0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mass_kg"));
}

#[test]
fn regime_violation_warns_but_succeeds() {
    let o = xoit(&["spectrum", "--power-nw", "2", "--rabi-rad-s", "500", "--grid-points", "11"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning: outside the perturbative regime"));
}

#[test]
fn power_sweep_contrast_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = xoit(&["sweep", "--var", "power", "--linspace", "0,5,11", "--grid-points", "21", "--output", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 11 * 21);
    let mut contrasts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[5].parse().unwrap())).collect();
    contrasts.dedup();
    assert_eq!(contrasts.len(), 11);
    assert!(contrasts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1));
    assert!(contrasts.last().unwrap().1 > 0.9);
    // row order: sweep value major, detuning minor
    let deltas: Vec<f64> = rows[..21].iter().map(|r| r[8].parse().unwrap()).collect();
    assert!(deltas.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn phonon_sweep_records_validity_transitions() {
    let o = xoit(&["sweep", "--var", "n", "--values", "1e5,5e6,2e8", "--grid-points", "5"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let validity: Vec<&str> = rows.iter().step_by(5).map(|r| r[4].as_str()).collect();
    assert_eq!(validity, ["marginal", "valid", "invalid"]);
}

#[test]
fn degenerate_sweeps_are_rejected() {
    assert_eq!(xoit(&["sweep", "--var", "power", "--values", "2"]).status.code(), Some(2));
    assert_eq!(xoit(&["sweep", "--var", "mass", "--values", "1,2"]).status.code(), Some(2));
    assert_eq!(xoit(&["sweep", "--var", "n", "--values", "1.5,2"]).status.code(), Some(2));
}

#[test]
fn validate_writes_report_and_names_failures() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = xoit(&["validate", "--report", path(&report)]);
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 10);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let criteria = doc["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 10);
    assert_eq!(criteria[0]["passed"], true);
    assert_eq!(criteria[1]["passed"], true);
    assert!(!doc["oracle_reports"].as_array().unwrap().is_empty());
    let all_pass = doc["passed"].as_bool().unwrap();
    assert_eq!(o.status.code(), Some(if all_pass { 0 } else { 1 }));
    if !all_pass {
        assert!(stderr(&o).contains("validation failed: criterion"));
    }
}

#[test]
fn injected_wrong_constant_fails_by_name() {
    let o = xoit(&["validate", "--inject-hbar-j-s", "1.2e-34"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL criterion  1 lamb-dicke-table"), "{out}");
    assert!(stderr(&o).contains("criterion 1 lamb-dicke-table"));
}
