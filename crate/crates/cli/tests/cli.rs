use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn intdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intdim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    intdim(&args)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn singleton_capdim_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(&configs().join("singleton_capdim.toml"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["results.csv", "manifest.json", "summary.txt"] {
        assert!(tmp.path().join(f).exists(), "{f} missing");
    }
    let m = manifest(tmp.path());
    assert!(m["result"]["s_star"].as_f64().unwrap().abs() <= 1e-3);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn transversality_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(&configs().join("transversality_fbm.toml"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("setting,r,p_hat,kernel,ratio,n_samples,seed"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    for row in &rows {
        assert_eq!(row[0], "fbm");
        assert_eq!(row[5], "20000");
        assert_eq!(row[6], "5");
        // 17 significant digits.
        assert_eq!(row[1].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
}

#[test]
fn cantor_translation_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(&configs().join("compare_selfaffine.toml"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let m = manifest(tmp.path());
    assert_eq!(m["result"]["universal_pass"], Value::Bool(true));
    assert!(m["result"]["median_abs_gap"].as_f64().unwrap() <= 0.1);
    let csv = std::fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    // 20 random translations plus a = 0.
    assert_eq!(csv.lines().count(), 22);
    assert!(csv.lines().any(|l| l.contains(",a=0,false,")));
}

#[test]
fn manifest_reruns_bit_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let out = run_config(&configs().join("cantor_interdim.toml"), &first, &["--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run_config(&first.join("manifest.json"), &second, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["results.csv", "summary.txt", "manifest.json"] {
        assert_eq!(
            std::fs::read(first.join(f)).unwrap(),
            std::fs::read(second.join(f)).unwrap(),
            "{f} differs"
        );
    }
    assert_eq!(manifest(&second)["seed"], 9);
}

#[test]
fn seed_override_changes_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("transversality_fbm.toml");
    run_config(&cfg, &tmp.path().join("a"), &[]);
    run_config(&cfg, &tmp.path().join("b"), &["--seed", "6"]);
    let (a, b) = (manifest(&tmp.path().join("a")), manifest(&tmp.path().join("b")));
    assert_eq!(a["seed"], 5);
    assert_eq!(b["seed"], 6);
    assert_ne!(a["config_sha256"], b["config_sha256"]);
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let missing = run_config(&tmp.path().join("nope.toml"), &out, &[]);
    assert_eq!(missing.status.code(), Some(2));

    let bad_syntax = write_config(tmp.path(), "bad.toml", "scenario = ");
    assert_eq!(run_config(&bad_syntax, &out, &[]).status.code(), Some(2));

    let unknown = write_config(tmp.path(), "unknown.toml", "scenario = \"dance\"");
    let o = run_config(&unknown, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("capdim"));

    let typo = write_config(tmp.path(), "typo.toml", "scenario = \"capdim\"\nthetaa = 0.5");
    assert_eq!(run_config(&typo, &out, &[]).status.code(), Some(2));

    let bad_theta = write_config(
        tmp.path(),
        "theta.toml",
        "scenario = \"capdim\"\ntheta = 1.5\nr_grid = { dyadic = [4, 12] }\nifs = { d = 1, matrices = [[0.3], [0.3]] }",
    );
    assert_eq!(run_config(&bad_theta, &out, &[]).status.code(), Some(2));
}

#[test]
fn failed_expectation_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "wrong.json",
        r#"{"scenario": "capdim", "theta": 1.0, "r_grid": {"dyadic": [4, 20]},
            "ifs": {"d": 1, "matrices": [[0.3333333333333333], [0.3333333333333333]]},
            "expect": {"value": 0.9, "tol": 0.05}}"#,
    );
    let out = run_config(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let summary = std::fs::read_to_string(tmp.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("[FAIL] expected value"));
    assert_eq!(manifest(&tmp.path().join("out"))["passed"], Value::Bool(false));
}

#[test]
fn resource_cap_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "big.toml",
        "scenario = \"capdim\"\ntau = 1.0\ncloud = { interval = 5000 }\nr_grid = { dyadic = [2, 8] }",
    );
    let out = run_config(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cloud_file_relative_to_config() {
    let tmp = tempfile::tempdir().unwrap();
    let pts: String = (0..=64).map(|i| format!("{}\n", i as f64 / 64.0)).collect();
    std::fs::write(tmp.path().join("line.csv"), pts).unwrap();
    let cfg = write_config(
        tmp.path(),
        "line.toml",
        "scenario = \"interdim\"\ncloud = { file = \"line.csv\" }\nr_grid = { dyadic = [0, 5] }\nexpect = { value = 1.0, tol = 0.1 }",
    );
    let out = run_config(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(tmp.path().join("out/results.csv")).unwrap();
    assert!(csv.starts_with("r,s,upper_bound,lower_certificate,single_scale_floor,cover_size"));
}
