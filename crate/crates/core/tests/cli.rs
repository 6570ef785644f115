//! End-to-end checks of the command-line binary: output formats, exit codes
//! and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pseudogap"))
}

fn write_config(dir: &std::path::Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn free_cfg(extra: &str) -> String {
    format!(
        "background.type = free\n\
         background.a = 1.0\n\
         wvn.c = 2.0\n\
         wvn.omega = 3.141592653589793\n\
         wvn.gamma = 0.6\n\
         bc.alpha = 0.8\n\
         {extra}"
    )
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn bands_csv_and_determinism() {
    let dir = std::env::temp_dir().join("pseudogap-cli-bands");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(&dir, "run.cfg", &free_cfg(""));

    let out1 = run(bin().args(["bands", "--config"]).arg(&cfg).args(["--jmax", "2"]));
    assert!(out1.status.success());
    let text1 = String::from_utf8(out1.stdout).unwrap();
    let lines: Vec<&str> = text1.trim().lines().collect();
    assert_eq!(lines[0], "j,lambda_j,mu_j");
    assert_eq!(lines.len(), 4);

    let out2 = run(bin().args(["bands", "--config"]).arg(&cfg).args(["--jmax", "2"]));
    assert_eq!(text1, String::from_utf8(out2.stdout).unwrap(), "not deterministic");
}

#[test]
fn predict_emits_exactly_seven_keys() {
    let dir = std::env::temp_dir().join("pseudogap-cli-predict");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(&dir, "run.cfg", &free_cfg(""));
    let out = run(bin()
        .args(["predict", "--config"])
        .arg(&cfg)
        .args(["--band", "1", "--sign", "-"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let obj = v.as_object().unwrap();
    assert_eq!(obj.len(), 7);
    for k in ["nu", "beta_cr", "phi_cr", "c_cr", "a_cr", "C_mp", "exponent_coeff"] {
        assert!(obj.contains_key(k), "missing key {k}");
    }
    // beta_cr = c/(4 omega) for the free background at the touching point.
    let beta = obj["beta_cr"].as_f64().unwrap();
    assert!((beta - 2.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-6);
}

#[test]
fn config_violation_exits_2() {
    let dir = std::env::temp_dir().join("pseudogap-cli-badcfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(&dir, "bad.cfg", &free_cfg("").replace("0.6", "1.2"));
    let out = run(bin().args(["bands", "--config"]).arg(&cfg).args(["--jmax", "1"]));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("gamma"), "error must name the violated condition: {err}");
}

#[test]
fn resonance_collision_exits_2() {
    // 2a*omega/pi = 1 (odd): the critical points of a band coincide.
    let dir = std::env::temp_dir().join("pseudogap-cli-odd");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(
        &dir,
        "odd.cfg",
        &free_cfg("").replace("3.141592653589793", "1.5707963267948966"),
    );
    let out = run(bin().args(["predict", "--config"]).arg(&cfg).args(["--band", "0", "--sign", "+"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn model_verify_table_shape() {
    let out = run(bin().args([
        "model-verify",
        "--beta",
        "0.25",
        "--gamma",
        "0.6",
        "--eps0-list",
        "0.2,0.1",
        "--fixture",
        "free-plus",
    ]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines[0], "eps0,eps,limit_norm,ratio,target");
    // |eps0_list| * both signs rows.
    assert_eq!(lines.len(), 1 + 4);
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 5);
    }
    let out2 = run(bin().args([
        "model-verify",
        "--beta",
        "0.25",
        "--gamma",
        "0.6",
        "--eps0-list",
        "0.2,0.1",
        "--fixture",
        "nope",
    ]));
    assert_eq!(out2.status.code(), Some(2));
}

#[test]
fn connection_refusal_and_trend() {
    // Too-large eps violates the z-interval: exit 2.
    let out = run(bin().args([
        "connection", "--beta", "0.5", "--gamma", "0.75", "--eps-list", "0.5",
    ]));
    assert_eq!(out.status.code(), Some(2));

    let out = run(bin().args([
        "connection", "--beta", "0.5", "--gamma", "0.75", "--eps-list", "0.04,0.02,0.01",
    ]));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .trim()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    // col1_target_dev decreasing along decreasing eps.
    assert!(rows[0][1] > rows[1][1] && rows[1][1] > rows[2][1], "{rows:?}");
}

#[test]
fn pseudogap_scan_csv_and_json() {
    let dir = std::env::temp_dir().join("pseudogap-cli-scan");
    std::fs::create_dir_all(&dir).unwrap();
    // Small x_max cap keeps this a smoke test; offsets far from the critical
    // point where convergence is quick.
    let cfg = write_config(
        &dir,
        "run.cfg",
        &free_cfg("run.x_max_cap = 30000\nrun.ode_tol = 1e-9\n"),
    );
    let out_path = dir.join("scan.csv");
    let out = run(bin()
        .args(["pseudogap", "--config"])
        .arg(&cfg)
        .args(["--band", "1", "--sign", "-", "--offsets", "0.2:1.0:5", "--out"])
        .arg(&out_path));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = csv.trim().lines().collect();
    assert_eq!(
        lines[0],
        "lambda,offset,A_re,A_im,rho_prime,tail_error,converged"
    );
    assert_eq!(lines.len(), 1 + 10); // 5 offsets, both sides
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 7);
    }
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for k in ["band", "sign", "nu", "alpha_cr", "fit_above", "fit_below", "sin2"] {
        assert!(v.get(k).is_some(), "missing {k} in JSON summary");
    }
    // Deterministic repetition: byte-identical CSV.
    let out_path2 = dir.join("scan2.csv");
    let _ = run(bin()
        .args(["pseudogap", "--config"])
        .arg(&cfg)
        .args(["--band", "1", "--sign", "-", "--offsets", "0.2:1.0:5", "--out"])
        .arg(&out_path2));
    assert_eq!(csv, std::fs::read_to_string(&out_path2).unwrap());
}
