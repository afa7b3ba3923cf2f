use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn pointpe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointpe"))
        .current_dir(dir)
        .env_remove("POINTPE_OUT_DIR")
        .args(args)
        .output()
        .expect("spawn pointpe")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = pointpe(dir, args);
    assert!(
        out.status.success(),
        "pointpe {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

fn xyz_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir.join("clouds")).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

/// Train and test sets plus a trained checkpoint under `tmp`.
fn trained(tmp: &Path) {
    ok(tmp, &["--out-dir", "train", "dataset", "--synthetic", "3x8", "--points", "128", "--seed", "1"]);
    ok(tmp, &["--out-dir", "test", "dataset", "--synthetic", "3x4", "--points", "128", "--seed", "2"]);
    ok(
        tmp,
        &["--out-dir", "model", "train", "--manifest", "train/manifest.json", "--dim", "32", "--epochs", "3", "--hidden", "16,8"],
    );
}

#[test]
fn dataset_counts_and_determinism() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["--out-dir", "a", "dataset", "--synthetic", "4x5", "--points", "64", "--seed", "9"]);
    ok(d, &["--out-dir", "b", "dataset", "--synthetic", "4x5", "--points", "64", "--seed", "9"]);
    let a = xyz_files(&d.join("a"));
    assert_eq!(a.len(), 20);
    for (x, y) in a.iter().zip(xyz_files(&d.join("b"))) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    let text = fs::read_to_string(&a[0]).unwrap();
    assert!(text.contains("# config_hash"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 64);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("a/classes.json")).unwrap()).unwrap();
    assert_eq!(doc["classes"].as_array().unwrap().len(), 4);
    assert!(d.join("a/run_config.json").is_file());
}

#[test]
fn env_var_sets_output_directory() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pointpe"))
        .current_dir(tmp.path())
        .env("POINTPE_OUT_DIR", "from_env")
        .args(["dataset", "--synthetic", "2x1", "--points", "16"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("from_env/manifest.json").is_file());
}

#[test]
fn missing_manifest_fails_without_writing() {
    let tmp = TempDir::new().unwrap();
    for args in [
        vec!["--out-dir", "x", "train", "--manifest", "nope.json"],
        vec!["--out-dir", "x", "corrupt", "--manifest", "nope.json", "--corruption", "gaussian", "--level", "1"],
        vec!["--out-dir", "x", "train"],
    ] {
        let out = pointpe(tmp.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!tmp.path().join("x").exists());
    }
}

#[test]
fn bad_flags_are_configuration_errors() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(pointpe(d, &["dataset", "--bogus"]).status.code(), Some(2));
    assert_eq!(pointpe(d, &["dataset", "--synthetic", "9x2"]).status.code(), Some(2));
    assert_eq!(pointpe(d, &["register", "--sigmas", "0.1:0.01:0.01"]).status.code(), Some(2));
    assert_eq!(pointpe(d, &["register", "--noise", "cutout"]).status.code(), Some(2));
    assert_eq!(pointpe(d, &["--threads", "0", "diagnose", "illustration"]).status.code(), Some(2));
    assert!(pointpe(d, &["--help"]).status.success());
}

#[test]
fn off_directory_input() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::create_dir(d.join("empty")).unwrap();
    assert_eq!(pointpe(d, &["--out-dir", "x", "dataset", "--off-dir", "empty"]).status.code(), Some(3));

    let tetra = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 2 3\n3 1 2 3\n";
    for class in ["a", "b"] {
        fs::create_dir_all(d.join("meshes").join(class)).unwrap();
        fs::write(d.join("meshes").join(class).join("m1.off"), tetra).unwrap();
        fs::write(d.join("meshes").join(class).join("m2.off"), tetra).unwrap();
    }
    ok(d, &["--out-dir", "off", "dataset", "--off-dir", "meshes", "--points", "50"]);
    assert_eq!(xyz_files(&d.join("off")).len(), 4);

    fs::write(d.join("meshes/a/m1.off"), "OFF\n1 1 0\n0 0 0\n").unwrap();
    assert_eq!(pointpe(d, &["--out-dir", "bad", "dataset", "--off-dir", "meshes"]).status.code(), Some(3));
}

#[test]
fn corrupt_writes_corrupted_copies() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["--out-dir", "clean", "dataset", "--synthetic", "2x2", "--points", "100"]);
    ok(
        d,
        &["--out-dir", "noisy", "corrupt", "--manifest", "clean/manifest.json", "--corruption", "background", "--level", "4"],
    );
    let files = xyz_files(&d.join("noisy"));
    assert_eq!(files.len(), 4);
    let pts = fs::read_to_string(&files[0]).unwrap().lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(pts, 120);
    let out = pointpe(d, &["--out-dir", "y", "corrupt", "--manifest", "clean/manifest.json", "--corruption", "gaussian", "--level", "11"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_rows_and_checkpoint_checks() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    trained(d);
    assert!(data_rows(&d.join("model/training_curve.csv")).len() == 3);

    let base = ["eval", "--checkpoint", "model/checkpoint.json", "--manifest", "test/manifest.json"];
    ok(d, &[&["--out-dir", "all"], &base[..], &["--corruption", "gaussian", "--levels", "all"]].concat());
    let rows = data_rows(&d.join("all/eval.csv"));
    assert_eq!(rows.len(), 10);
    assert!(rows[0].starts_with("gaussian_noise,1,0.01,mean,"));

    ok(d, &[&["--out-dir", "clean"], &base[..]].concat());
    let rows = data_rows(&d.join("clean/eval.csv"));
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("none,0,"));

    ok(d, &[&["--out-dir", "some"], &base[..], &["--corruption", "rotation", "--params", "0.1,0.2"]].concat());
    assert_eq!(data_rows(&d.join("some/eval.csv")).len(), 2);

    let out = pointpe(d, &[&["--out-dir", "mismatch"], &base[..], &["--encoder-seed", "7"]].concat());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    assert!(!d.join("mismatch").exists());

    // a checkpoint whose embedded config no longer matches its hash
    let text = fs::read_to_string(d.join("model/checkpoint.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["run_config"]["train"]["epochs"] = serde_json::json!(99);
    fs::write(d.join("tampered.json"), doc.to_string()).unwrap();
    let out = pointpe(d, &["--out-dir", "t", "eval", "--checkpoint", "tampered.json", "--manifest", "test/manifest.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn register_writes_one_row_per_pooling_and_sigma() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["--out-dir", "r", "register", "--instances", "1", "--points", "48", "--dim", "32", "--trials", "1"]);
    let rows = data_rows(&d.join("r/register.csv"));
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().take(10).all(|r| r.starts_with("mean,gaussian_noise,")));
    assert!(rows.iter().skip(10).all(|r| r.starts_with("max,gaussian_noise,")));
    let svg = fs::read_to_string(d.join("r/register.svg")).unwrap();
    assert!(svg.contains("config_hash"));
}

#[test]
fn config_file_with_overrides() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["--out-dir", "a", "diagnose", "frequency", "--samples", "10000", "--dims", "2"]);
    ok(d, &["--out-dir", "b", "diagnose", "frequency", "--config", "a/run_config.json", "--bandwidth", "4"]);
    let a = fs::read_to_string(d.join("a/run_config.json")).unwrap();
    let b = fs::read_to_string(d.join("b/run_config.json")).unwrap();
    assert_ne!(a, b);
    assert!(b.contains("10000"));
    let rows = data_rows(&d.join("b/frequency.csv"));
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("2,4.0,10000,"));

    // a frequency config is not a distance config
    let out = pointpe(d, &["--out-dir", "c", "diagnose", "distance", "--config", "a/run_config.json"]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(d.join("junk.json"), "{\"command\": \"train\", \"nonsense\": 1}").unwrap();
    assert_eq!(pointpe(d, &["run", "junk.json"]).status.code(), Some(2));
}

#[test]
fn run_reproduces_training_outputs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    trained(d);
    ok(d, &["--out-dir", "again", "run", "model/run_config.json"]);
    assert_eq!(
        data_rows(&d.join("model/training_curve.csv")),
        data_rows(&d.join("again/training_curve.csv"))
    );
    assert_eq!(
        fs::read(d.join("model/checkpoint.json")).unwrap(),
        fs::read(d.join("again/checkpoint.json")).unwrap()
    );
    // thread count does not change results
    ok(d, &["--threads", "1", "--out-dir", "one", "run", "model/run_config.json"]);
    assert_eq!(
        fs::read(d.join("model/checkpoint.json")).unwrap(),
        fs::read(d.join("one/checkpoint.json")).unwrap()
    );
}
