//! End-to-end tests of the binary: outputs, exit codes, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dehntwist")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write_map(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn constants_pure_twist_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let map = write_map(tmp.path(), "pure_twist.map", "k_dehn = 1\n");
    let out = tmp.path().join("out");
    let r = run(&["constants", "--map", &map, "--out", out.to_str().unwrap()]);
    assert!(r.status.success());
    assert_eq!(String::from_utf8_lossy(&r.stdout).trim(), "M_thm3 30");
    let table = fs::read_to_string(out.join("constants.txt")).unwrap();
    assert!(table.lines().last().unwrap() == "M_thm3 30");
    assert!(table.contains("# V_f = (3 + 2·B_f)/k"));
}

#[test]
fn rotation_drift_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let map = write_map(tmp.path(), "drift.map", "k_dehn = 1\nv.const = 0.25\n");
    let out = tmp.path().join("out");
    let r = run(&[
        "rotation", "--map", &map, "--seeds", "64", "--iters", "1000", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    assert_eq!(
        String::from_utf8_lossy(&r.stdout).trim(),
        "rho_lower 0.25 rho_upper 0.25"
    );
    let csv = fs::read_to_string(out.join("rotation_per_seed.csv")).unwrap();
    assert!(csv.starts_with("seed,x,y,average\n"));
    assert_eq!(csv.lines().count(), 65);
}

#[test]
fn certify_entropy_exit_codes_and_files() {
    let tmp = tempfile::tempdir().unwrap();
    let k5 = write_map(tmp.path(), "k5.map", "k_dehn = 1\nv.sin.1 = 0.7957747154594768\n");
    let out = tmp.path().join("out");
    let r = run(&[
        "certify", "--goal", "entropy", "--map", &k5, "--seeds", "1024", "--iters", "20000",
        "--rng-seed", "7", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0));
    let report = fs::read_to_string(out.join("certificate.txt")).unwrap();
    assert!(report.contains("entropy_interior_zero"));
    assert!(report.contains("witness positive"));
    assert!(report.contains("witness negative"));

    // pure twist: inconclusive, exit 2
    let twist = write_map(tmp.path(), "twist.map", "k_dehn = 1\n");
    let r = run(&[
        "certify", "--goal", "entropy", "--map", &twist, "--seeds", "16", "--iters", "100",
        "--out", tmp.path().join("out2").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));

    // drift tested against 0/1: violated, exit 3
    let drift = write_map(tmp.path(), "drift.map", "k_dehn = 1\nv.const = 0.5\n");
    let r = run(&[
        "certify", "--goal", "bounded", "--map", &drift, "--p", "0", "--q", "1", "--seeds",
        "16", "--iters", "200", "--out", tmp.path().join("out3").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn error_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(&["constants", "--map", tmp.path().join("missing.map").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(64));

    let bad = write_map(tmp.path(), "bad.map", "k_dehn = 0\n");
    let r = run(&["constants", "--map", &bad]);
    assert_eq!(r.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 1"));

    let unknown = write_map(tmp.path(), "unknown.map", "k_dehn = 1\nwhat = 3\n");
    let r = run(&["constants", "--map", &unknown]);
    assert_eq!(r.status.code(), Some(65));
}

#[test]
fn outputs_byte_identical_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let map = write_map(
        tmp.path(),
        "k2.map",
        "k_dehn = 2\nh.sin.1 = 0.3\nv.sin.1 = 0.5\n",
    );
    let run_once = |dir: &str, threads: &str| {
        let out = tmp.path().join(dir);
        let r = run(&[
            "certify", "--goal", "exactness", "--map", &map, "--b", "0.3", "--samples",
            "200000", "--rng-seed", "42", "--threads", threads, "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.code() == Some(0), "stderr: {}", String::from_utf8_lossy(&r.stderr));
        fs::read(out.join("certificate.txt")).unwrap()
    };
    let a = run_once("o1", "1");
    let b = run_once("o2", "2");
    let c = run_once("o3", "1");
    assert_eq!(a, b, "thread count changed the output");
    assert_eq!(a, c, "repeated run changed the output");

    // rotation CSVs byte-identical as well
    let rot = |dir: &str, threads: &str| {
        let out = tmp.path().join(dir);
        let r = run(&[
            "rotation", "--map", &map, "--seeds", "100", "--iters", "2000", "--threads",
            threads, "--out", out.to_str().unwrap(),
        ]);
        assert!(r.status.success());
        fs::read(out.join("rotation_per_seed.csv")).unwrap()
    };
    assert_eq!(rot("r1", "1"), rot("r2", "2"));
}

#[test]
fn basins_and_bricks_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let k05 = write_map(tmp.path(), "k05.map", "k_dehn = 1\nv.sin.1 = 0.07957747154594767\n");
    let out = tmp.path().join("basins");
    let r = run(&[
        "basins", "--map", &k05, "--horizon", "500", "--resolution", "64x64", "--window",
        "-2:0.5", "--keep-unbounded", "--out", out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    let pgm = fs::read(out.join("mask.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
    let profile = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(profile.starts_with("# unbounded-component filter applied"));

    let twist = write_map(tmp.path(), "twist.map", "k_dehn = 1\n");
    let out = tmp.path().join("bricks");
    let r = run(&["bricks", "--map", &twist, "--out", out.to_str().unwrap()]);
    assert!(r.status.success());
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("fully_certified true"), "{stdout}");
    assert!(stdout.contains("chain none"), "{stdout}");
    let bricks = fs::read_to_string(out.join("bricks.csv")).unwrap();
    assert!(bricks.starts_with("id,kind,x0,y0,x1,y1,status\n"));
    assert!(bricks.contains("lower_strip"));
    let edges = fs::read_to_string(out.join("edges.csv")).unwrap();
    assert!(edges.starts_with("src,dst,shift,label\n"));
    assert!(edges.contains("certified_present"));
    assert!(edges.contains("certified_absent"));
}
