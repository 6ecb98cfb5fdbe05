//! End-to-end checks of the binary: schemas, precedence, exit codes, and
//! the metadata sidecar.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sechsim"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sechsim-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn read_csv(path: &Path) -> (String, Vec<String>) {
    let body = std::fs::read_to_string(path).unwrap();
    let mut lines = body.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.map(|s| s.to_string()).collect())
}

fn meta(path: &Path) -> serde_json::Value {
    let meta_path = format!("{}.meta.json", path.display());
    serde_json::from_str(&std::fs::read_to_string(meta_path).unwrap()).unwrap()
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn leakage_schema_and_row_count() {
    let out = tmp("leakage.csv");
    run_ok(bin().args(["leakage", "--output", out.to_str().unwrap()]));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, "t_us,p_leak_numeric,p_leak_perturbative");
    assert!(rows.len() >= 200, "expected >= 200 rows, got {}", rows.len());
    // echoed metadata config re-parses and matches the defaults + output
    let m = meta(&out);
    assert_eq!(m["command"], "leakage");
    assert_eq!(m["config"]["omega0"], "4");
    assert_eq!(m["config"]["points"], "256");
}

#[test]
fn leakage_is_byte_stable() {
    let a = tmp("leak-a.csv");
    let b = tmp("leak-b.csv");
    run_ok(bin().args(["leakage", "--output", a.to_str().unwrap()]));
    run_ok(bin().args(["leakage", "--output", b.to_str().unwrap()]));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn flag_overrides_config_file() {
    let cfg = tmp("override.conf");
    std::fs::write(&cfg, "omega0 = 8\npoints = 16\n").unwrap();
    let out = tmp("override.csv");
    run_ok(bin().args([
        "leakage",
        "--config",
        cfg.to_str().unwrap(),
        "--omega0",
        "4",
        "--output",
        out.to_str().unwrap(),
    ]));
    let m = meta(&out);
    assert_eq!(m["config"]["omega0"], "4"); // flag beat the file
    assert_eq!(m["config"]["points"], "16"); // file beat the default
}

#[test]
fn apply_2pi_is_echoed_and_scaled_once() {
    let out = tmp("twopi.csv");
    run_ok(bin().args(["leakage", "--apply-2pi", "--points", "32", "--output", out.to_str().unwrap()]));
    let m = meta(&out);
    assert_eq!(m["config"]["apply_2pi"], "true");
    assert_eq!(m["config"]["omega0"], "4"); // raw value echoed unscaled
    let resolved = m["resolved_frequencies"]["omega0"].as_f64().unwrap();
    assert!((resolved - 4.0 * std::f64::consts::TAU).abs() < 1e-9);
}

#[test]
fn unknown_config_key_is_usage_error() {
    let cfg = tmp("bad.conf");
    std::fs::write(&cfg, "omega_zero = 4\n").unwrap();
    let out = tmp("bad.csv");
    let r = bin()
        .args(["leakage", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn missing_output_is_usage_error() {
    let r = bin().args(["leakage"]).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn malformed_number_is_usage_error() {
    let out = tmp("malformed.csv");
    let r = bin()
        .args(["leakage", "--output", out.to_str().unwrap(), "--omega0", "four"])
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn program_dump_robust_has_24_events() {
    let out = tmp("robust.txt");
    run_ok(bin().args([
        "program-dump",
        "--program",
        "robust-cphase",
        "--output",
        out.to_str().unwrap(),
    ]));
    let body = std::fs::read_to_string(&out).unwrap();
    let events: Vec<&str> =
        body.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).collect();
    assert_eq!(events.len(), 24);
    // line format: index ion transition phase t_start duration
    let first: Vec<&str> = events[0].split_whitespace().collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[1], "control");
    assert_eq!(first[2], "0e");
    assert_eq!(first.last().unwrap(), &"1.5");
    // last event starts at 23 * 1.5 = 34.5
    let last: Vec<&str> = events[23].split_whitespace().collect();
    assert_eq!(last[last.len() - 2], "34.5");
}

#[test]
fn program_dump_rotation_carries_two_colors() {
    let out = tmp("rotation.txt");
    run_ok(bin().args([
        "program-dump",
        "--program",
        "rotation",
        "--theta",
        "1.5707963267948966",
        "--output",
        out.to_str().unwrap(),
    ]));
    let body = std::fs::read_to_string(&out).unwrap();
    let events: Vec<&str> =
        body.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).collect();
    assert_eq!(events.len(), 4);
    for e in &events {
        let fields: Vec<&str> = e.split_whitespace().collect();
        assert_eq!(fields.len(), 8, "two-color lines carry two transition/phase pairs");
        assert_eq!(fields[2], "0e");
        assert_eq!(fields[4], "1e");
    }
}

#[test]
fn not_check_schema() {
    let out = tmp("not.csv");
    run_ok(bin().args([
        "not-check",
        "--detuning-steps",
        "3",
        "--output",
        out.to_str().unwrap(),
    ]));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, "delta_opt,p_flip,p_excited");
    assert_eq!(rows.len(), 3);
}

#[test]
fn rotation_check_schema() {
    let out = tmp("rot.csv");
    run_ok(bin().args([
        "rotation-check",
        "--theta-steps",
        "2",
        "--detuning",
        "0",
        "--hf-shift",
        "0",
        "--output",
        out.to_str().unwrap(),
    ]));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, "theta_rad,alpha_rad,operator_distance");
    assert_eq!(rows.len(), 2);
}

#[test]
fn cphase_surface_default_grid_is_441_rows() {
    let out = tmp("surface.csv");
    run_ok(bin().args(["cphase-surface", "--output", out.to_str().unwrap()]));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, "delta_c,delta_t,fidelity");
    assert_eq!(rows.len(), 441);
    let m = meta(&out);
    assert!(m["u0_checksum"].as_str().unwrap().len() == 16);
    assert_eq!(m["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn lifetime_sweep_rows_scale_with_te_list() {
    let out = tmp("lifetime.csv");
    run_ok(bin().args([
        "lifetime-sweep",
        "--te-list",
        "100,1000",
        "--hf-t-steps",
        "3",
        "--hf-c-steps",
        "1",
        "--output",
        out.to_str().unwrap(),
    ]));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, "te_us,delta_t,fidelity");
    assert_eq!(rows.len(), 2 * 3);
}

#[test]
fn json_format_mirrors_csv() {
    let out = tmp("leak.json");
    run_ok(bin().args([
        "leakage",
        "--format",
        "json",
        "--points",
        "8",
        "--output",
        out.to_str().unwrap(),
    ]));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["columns"].as_array().unwrap().len(), 3);
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
}
