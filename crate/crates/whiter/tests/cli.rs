//! End-to-end checks of the command line binary: artifact layout, exit
//! codes, report formats, and the error paths a user is most likely to hit.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn whiter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_whiter"))
        .args(args)
        .output()
        .expect("the binary should run")
}

fn out_text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn err_text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    let text = fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {}", path.display(), e));
    serde_json::from_str(&text)
        .unwrap_or_else(|e| panic!("parsing {}: {}", path.display(), e))
}

fn file_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .expect("output directory should exist")
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn example1_run_writes_the_full_artifact_set() {
    let dir = tempdir().unwrap();
    let out = dir.path();
    let o = whiter(&[
        "example1", "--lambda", "0.2", "--L", "2", "--iters", "40",
        "--out", out.to_str().unwrap(),
    ]);
    let stdout = out_text(&o);
    assert!(o.status.success(), "stderr: {}", err_text(&o));
    assert!(stdout.contains("example1:"), "stdout: {stdout}");
    assert!(stdout.contains("converged: true"), "stdout: {stdout}");
    assert!(stdout.contains("phi_l vs reference:"), "stdout: {stdout}");

    assert_eq!(
        file_names(out),
        [
            "config.json",
            "convergence.json",
            "phi_0.csv",
            "phi_l.csv",
            "psi_0.csv",
            "psi_l.csv",
            "reference_errors.json",
        ]
    );

    let csv = fs::read_to_string(out.join("phi_l.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("alpha_re,alpha_im,value_re,value_im"));
    assert_eq!(lines.count(), 2048, "one row per default grid node");

    let conv = read_json(&out.join("convergence.json"));
    assert_eq!(conv["converged"], Value::Bool(true));
    let r = &conv["residuals"];
    let scale = r["forcing_scale"].as_f64().unwrap();
    assert!(r["row1"].as_f64().unwrap() <= 1e-6 * scale);
    assert!(r["row2"].as_f64().unwrap() <= 1e-6 * scale);

    let refs = read_json(&out.join("reference_errors.json"));
    for entry in refs.as_array().unwrap() {
        let errs = entry["max_abs"].as_array().unwrap();
        let last = errs.last().unwrap().as_f64().unwrap();
        assert!(last <= 1e-8, "{} ended at {last:e}", entry["unknown"]);
    }
}

#[test]
fn example2_run_tracks_its_reference_and_bounds() {
    let dir = tempdir().unwrap();
    let out = dir.path();
    let o = whiter(&[
        "example2", "--lambda", "0.1", "--L", "1e-4",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", err_text(&o));

    let conv = read_json(&out.join("convergence.json"));
    assert_eq!(conv["converged"], Value::Bool(true));
    let q = conv["estimate"]["q"].as_f64().unwrap();
    assert!(q > 0.0 && q < 0.01, "weak coupling should give a tiny rate, got {q}");

    // with a contracting rate the file carries the a priori error bounds
    let n = conv["iterations"].as_u64().unwrap() as usize;
    let bounds = conv["predicted_bounds"].as_array().unwrap();
    assert_eq!(bounds.len(), n);

    let refs = read_json(&out.join("reference_errors.json"));
    let u2 = refs
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["unknown"] == "u2")
        .expect("u2 entry");
    let errs: Vec<f64> = u2["max_abs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(errs.windows(2).take(3).all(|w| w[1] < w[0]), "errors fall: {errs:?}");
    assert!(*errs.last().unwrap() <= 1e-10);
}

#[test]
fn a_custom_config_solves_a_unit_kernel_system() {
    let dir = tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    fs::write(
        &cfg_path,
        r#"{
            "problem": {"custom": {
                "a": "1", "b": "1", "c": "1",
                "f1": "1/(alpha-1.5i)+0.3/(alpha+2.5i)",
                "f2_smooth": "0.7/(alpha-1.1i)+1/(alpha+3i)"
            }},
            "lambda": 0.0,
            "L": 1.7,
            "line_a": -0.5,
            "line_b": 0.5
        }"#,
    )
    .unwrap();
    let out = dir.path().join("artifacts");
    let o = whiter(&[
        "solve", "--config", cfg_path.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", err_text(&o));
    assert!(out_text(&o).contains("custom:"));

    // no reference is available, so no reference_errors.json
    assert_eq!(
        file_names(&out),
        ["config.json", "convergence.json", "phi_0.csv", "phi_l.csv", "psi_0.csv", "psi_l.csv"]
    );
    let conv = read_json(&out.join("convergence.json"));
    let r = &conv["residuals"];
    let scale = r["forcing_scale"].as_f64().unwrap();
    assert!(r["row1"].as_f64().unwrap() <= 1e-8 * scale);
    assert!(r["row2"].as_f64().unwrap() <= 1e-8 * scale);
}

#[test]
fn unknown_problem_names_exit_with_the_config_code() {
    let dir = tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    fs::write(
        &cfg_path,
        r#"{"problem": "example9", "lambda": 0.2, "L": 2.0}"#,
    )
    .unwrap();
    let o = whiter(&["solve", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = err_text(&o);
    assert!(stderr.contains("unknown problem"), "stderr: {stderr}");
    assert!(stderr.contains("example1, example2, custom"), "stderr: {stderr}");
}

#[test]
fn out_of_class_parameters_exit_with_the_class_code() {
    let dir = tempdir().unwrap();
    let o = whiter(&[
        "example2", "--lambda", "0.3", "--L", "1",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(err_text(&o).contains("class violation"), "stderr: {}", err_text(&o));
}

#[test]
fn a_zero_cycle_budget_exits_unconverged_but_keeps_artifacts() {
    let dir = tempdir().unwrap();
    let out = dir.path();
    let o = whiter(&[
        "example1", "--lambda", "0.2", "--L", "2", "--iters", "0",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(err_text(&o).contains("not converged"), "stderr: {}", err_text(&o));

    // the run still leaves everything on disk for inspection
    let conv = read_json(&out.join("convergence.json"));
    assert_eq!(conv["iterations"].as_u64(), Some(0));
    assert_eq!(conv["converged"], Value::Bool(false));
    assert!(out.join("phi_l.csv").exists());
}

#[test]
fn additive_split_reconstructs_its_input() {
    let dir = tempdir().unwrap();
    let out = dir.path();
    let o = whiter(&[
        "split", "--expr", "1/(alpha-2i)+1/(alpha+3i)",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", err_text(&o));
    assert!(out_text(&o).contains("reconstruction error:"));

    assert_eq!(file_names(out), ["input.csv", "minus.csv", "plus.csv", "split.json"]);
    let report = read_json(&out.join("split.json"));
    assert_eq!(report["kind"], "add");
    assert_eq!(report["winding"], Value::Null);
    assert!(report["reconstruction_error"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn multiplicative_split_reports_a_zero_winding() {
    let dir = tempdir().unwrap();
    let out = dir.path();
    let o = whiter(&[
        "split", "--expr", "(alpha^2+1)/(alpha^2+4)", "--kind", "mult",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", err_text(&o));
    assert!(out_text(&o).contains("winding index: 0"));

    let report = read_json(&out.join("split.json"));
    assert_eq!(report["winding"].as_i64(), Some(0));
    assert!(report["reconstruction_error"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn a_nonzero_winding_is_rejected_as_out_of_class() {
    let dir = tempdir().unwrap();
    let o = whiter(&[
        "split", "--expr", "(alpha-i)/(alpha+i)", "--kind", "mult",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(err_text(&o).contains("class violation"), "stderr: {}", err_text(&o));
}

#[test]
fn expression_errors_point_at_the_offending_byte() {
    let dir = tempdir().unwrap();
    let o = whiter(&[
        "split", "--expr", "alpha+*2",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(err_text(&o).contains("at byte 6"), "stderr: {}", err_text(&o));
}

#[test]
fn families_lists_every_registered_problem() {
    let o = whiter(&["families"]);
    assert!(o.status.success());
    let stdout = out_text(&o);
    for name in ["example1", "example2", "custom"] {
        assert!(stdout.contains(name), "missing {name} in: {stdout}");
    }
}

#[test]
fn the_output_environment_variable_is_honored() {
    let dir = tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_whiter"))
        .args(["split", "--expr", "1/(alpha-2i)"])
        .env("WHITER_OUT", dir.path())
        .output()
        .expect("the binary should run");
    assert!(o.status.success(), "stderr: {}", err_text(&o));
    assert!(dir.path().join("input.csv").exists());
    assert!(dir.path().join("split.json").exists());
}

#[test]
fn json_format_emits_parseable_sample_arrays() {
    let dir = tempdir().unwrap();
    let out = dir.path();
    let o = whiter(&[
        "example2", "--lambda", "0.1", "--L", "1e-4", "--format", "json",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", err_text(&o));

    let u2 = read_json(&out.join("u2.json"));
    let alpha = u2["alpha"].as_array().unwrap();
    let values = u2["values"].as_array().unwrap();
    assert_eq!(alpha.len(), values.len());
    assert_eq!(alpha.len(), 2048);
    assert!(values.iter().all(|v| v.as_array().map_or(false, |p| p.len() == 2)));

    let cfg = read_json(&out.join("config.json"));
    assert_eq!(cfg["format"], "json");
}
