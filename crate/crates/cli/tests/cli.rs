use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spinlink"));
    c.env_remove("SPINLINK_OUT_DIR");
    c
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn spinlink")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("summary is JSON")
}

fn error_line(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "error must be one line: {text}");
    let v: Value = serde_json::from_str(text.trim_end()).unwrap();
    assert!(v["error"].is_string() && v["kind"].is_string());
    v
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("fig3a.json");
    let mut contents = Vec::new();
    for (k, jobs) in ["1", "3"].iter().enumerate() {
        let out_path = dir.path().join(format!("run{k}/trace.csv"));
        let out = run(&["transfer", "--config", cfg.to_str().unwrap(), "--out", out_path.to_str().unwrap(), "--jobs", jobs]);
        let summary = stdout_json(&out);
        let files: Vec<Vec<u8>> = summary["files"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| std::fs::read(f.as_str().unwrap()).unwrap())
            .collect();
        assert_eq!(files.len(), 3);
        contents.push(files);
    }
    assert_eq!(contents[0], contents[1]);
}

#[test]
fn every_output_carries_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"mode":"transfer","topology":{"variant":"cluster","x":1},"N":[3,4],"tau_max":2,"tau_steps":50}"#;
    let cfg = write_config(dir.path(), "cluster.json", text);
    let out = bin()
        .args(["transfer", "--config", cfg.to_str().unwrap()])
        .env("SPINLINK_OUT_DIR", dir.path().join("out"))
        .output()
        .unwrap();
    let summary = stdout_json(&out);
    let files = summary["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    assert!(files[0].as_str().unwrap().ends_with("out/cluster_N3.csv"));
    let version = env!("CARGO_PKG_VERSION");
    let digest = summary["provenance"]["config_sha256"].as_str().unwrap().to_string();
    assert_eq!(digest.len(), 64);
    for f in files {
        let body = std::fs::read_to_string(f.as_str().unwrap()).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], format!("# spinlink {version}"));
        assert_eq!(lines[2], format!("# config_sha256 {digest}"));
        assert_eq!(lines[3], "tau,re_a,im_a,F01,Fbar_raw,Fbar_phase_opt");
        assert_eq!(lines.len(), 4 + 51);
    }

    let json_out = dir.path().join("cluster.json.out");
    let out = run(&["transfer", "--config", cfg.to_str().unwrap(), "--format", "json", "--out", json_out.to_str().unwrap()]);
    stdout_json(&out);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(doc["provenance"]["version"], version);
    assert_eq!(doc["provenance"]["config_sha256"], digest.as_str());
}

#[test]
fn failures_emit_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad_f = write_config(dir.path(), "f.json", r#"{"mode":"transfer","topology":{"variant":"engineered","x":1,"f":0.5},"N":4}"#);
    let out = run(&["transfer", "--config", bad_f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_line(&out);
    assert_eq!(e["kind"], "config");
    assert!(e["error"].as_str().unwrap().contains("f must exceed 1"));

    let unknown = write_config(dir.path(), "u.json", r#"{"mode":"transfer","topology":{"variant":"cluster"},"N":4,"tau":3}"#);
    let e = error_line(&run(&["transfer", "--config", unknown.to_str().unwrap()]));
    assert!(e["error"].as_str().unwrap().contains("`tau`"));

    let e = error_line(&run(&["spectrum", "--config", unknown.to_str().unwrap()]));
    assert!(e["error"].as_str().unwrap().contains("`mode`"));

    let missing = dir.path().join("nope.json");
    let e = error_line(&run(&["transfer", "--config", missing.to_str().unwrap()]));
    assert_eq!(e["kind"], "config");

    // valid config, but custom couplings have no qubit-cavity realization
    let custom = write_config(
        dir.path(),
        "c.json",
        r#"{"mode":"validate","topology":{"variant":"custom","J":[[0,1,0],[1,0,1],[0,1,0]]},"N":3,"tau_steps":10,"tau_max":1}"#,
    );
    let out = run(&["validate", "--config", custom.to_str().unwrap(), "--out", dir.path().join("v.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_line(&out);
    assert!(e["error"].as_str().unwrap().contains("custom couplings"));
}

fn close(a: &Value, b: &Value, path: &str) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "{path}: {x} vs golden {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}: length");
            for (k, (p, q)) in x.iter().zip(y).enumerate() {
                close(p, q, &format!("{path}[{k}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            let mut kx: Vec<_> = x.keys().collect();
            let mut ky: Vec<_> = y.keys().collect();
            kx.sort();
            ky.sort();
            assert_eq!(kx, ky, "{path}: keys");
            for k in kx {
                close(&x[k], &y[k], &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

/// Three runs for N = 4, 5, 6 at f = 5, summary fixed at the first verified run.
#[test]
fn fig3a_scenario_matches_golden_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("fig3a.json");
    let out = run(&["transfer", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("fig3a.csv").to_str().unwrap()]);
    let mut summary = stdout_json(&out);
    let files = summary.as_object_mut().unwrap().remove("files").unwrap();
    let names: Vec<String> = files
        .as_array()
        .unwrap()
        .iter()
        .map(|f| Path::new(f.as_str().unwrap()).file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["fig3a_N4_f5.csv", "fig3a_N5_f5.csv", "fig3a_N6_f5.csv"]);
    let ns: Vec<u64> = summary["runs"].as_array().unwrap().iter().map(|r| r["N"].as_u64().unwrap()).collect();
    assert_eq!(ns, [4, 5, 6]);

    let golden_text = include_str!("golden/fig3a_summary.json");
    let mut golden: Value = serde_json::from_str(golden_text).unwrap();
    // the version moves with releases; everything else is pinned
    for v in [&mut summary, &mut golden] {
        v["provenance"].as_object_mut().unwrap().remove("version");
    }
    close(&summary, &golden, "$");
}

#[test]
fn engineered_three_qubit_peak() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("engineered_n3_f10.json");
    let out = run(&["transfer", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("t.csv").to_str().unwrap()]);
    let summary = stdout_json(&out);
    let r = &summary["runs"][0];
    let peak = r["peak_F01"].as_f64().unwrap();
    let tau = r["tau_at_peak"].as_f64().unwrap();
    let tau_star = 2.0 * 10.0 * std::f64::consts::PI / (1.0f64 + 800.0).sqrt();
    assert!((peak - 0.973).abs() < 0.002, "peak {peak}");
    assert!((tau - tau_star).abs() < 0.02, "tau {tau} vs {tau_star}");
}

#[test]
fn spectrum_reports_both_eigenvalue_sets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("spectrum_n5.json");
    let out_path = dir.path().join("s.json");
    let summary = stdout_json(&run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out_path.to_str().unwrap()]));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let r = &doc["runs"][0];
    let numeric: Vec<f64> = r["numeric"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let analytic: Vec<f64> = r["analytic"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(numeric.len(), 5);
    // x = 1, f = 5: the symmetric end state (x/f on the diagonal) couples by
    // sqrt(6) x to the symmetric inner state (2 f x); the antisymmetric end
    // state sits at -x/f and the two other inner states at -f x
    let (f, x) = (5.0f64, 1.0f64);
    let (p, q) = (x / f, 2.0 * f * x);
    let disc = ((q - p).powi(2) + 4.0 * 6.0 * x * x).sqrt();
    let mut oracle = vec![-f * x, -f * x, -x / f, (p + q - disc) / 2.0, (p + q + disc) / 2.0];
    oracle.sort_by(|p, q| p.partial_cmp(q).unwrap());
    for (k, e) in oracle.iter().enumerate() {
        assert!((numeric[k] - e).abs() < 1e-9, "numeric[{k}] = {} vs {e}", numeric[k]);
        assert!((analytic[k] - e).abs() < 1e-9, "analytic[{k}] = {} vs {e}", analytic[k]);
    }
    assert!(r["max_abs_diff"].as_f64().unwrap() < 1e-9);
    assert_eq!(summary["runs"][0]["N"], 5);
}

#[test]
fn sweep_table_has_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"mode":"sweep","topology":{"variant":"engineered","x":1},"N":[4,5],"f":[5,1.1],"tau_max":30,"tau_steps":3000}"#;
    let cfg = write_config(dir.path(), "sweep.json", text);
    let out_path = dir.path().join("sweep.csv");
    stdout_json(&run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out_path.to_str().unwrap()]));
    let body = std::fs::read_to_string(out_path).unwrap();
    let rows: Vec<&str> = body.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "N,f,receiver,peak_F01,tau_at_peak,F_m,A,envelope_peak_tau,peak_Fbar");
    let keys: Vec<String> = rows[1..].iter().map(|r| r.split(',').take(2).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(keys, ["4,5", "5,5", "4,1.1", "5,1.1"]);
}

#[test]
fn validate_and_dissipative_modes_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("validate_n3.json");
    let summary = stdout_json(&run(&["validate", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("v.json").to_str().unwrap()]));
    let r = &summary["runs"][0];
    // second-order convergence with the Lamb shifts compensated
    let p = r["scaling_exponent"].as_f64().unwrap();
    assert!((p - 2.0).abs() < 0.1, "exponent {p}");

    let text = r#"{"mode":"dissipative","topology":{"variant":"engineered","x":1,"f":5},"N":3,"tau_max":5,"tau_steps":50,
                   "rates":{"gamma_relax":0.01,"gamma_phi":0.02}}"#;
    let cfg = write_config(dir.path(), "d.json", text);
    let out_path = dir.path().join("d.csv");
    let summary = stdout_json(&run(&["dissipative", "--config", cfg.to_str().unwrap(), "--out", out_path.to_str().unwrap()]));
    let r = &summary["runs"][0];
    assert!(r["max_trace_error"].as_f64().unwrap() < 1e-9);
    assert!(r["min_eigenvalue"].as_f64().unwrap() >= -1e-8);
    let body = std::fs::read_to_string(out_path).unwrap();
    assert!(body.lines().nth(3).unwrap() == "tau,F01,trace,purity,min_eig");
}
