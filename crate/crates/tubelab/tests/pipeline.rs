//! End-to-end runs of the `tubelab` binary: artifact layout, manifest,
//! determinism, and exit-code semantics.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tubelab")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tubelab-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn small_tube_config() -> &'static str {
    "[study]\nkind = tube\nseed = 5\n\n[curve]\npreset = bump\nlength = 6\ncenter = 3\nwidth = 1.2\namplitude = 1.2\nnodes = 25\n\n[section]\nshape = rectangle 3.141592653589793 2.221441469079183\nh = 0.392699081698724\n\n[tube]\ntask = confinement\nn = 0\neps = 0.3 0.15\nj_max = 2\n"
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let p = dir.join("study.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn tube_study_writes_expected_artifacts() {
    let dir = tmp("artifacts");
    let cfg = write_config(&dir, small_tube_config());
    let out_dir = dir.join("out");
    let (code, stdout, stderr) = run(&[
        "tube",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("artifacts written"));
    for f in [
        "confinement.csv",
        "confinement.dat",
        "summary.json",
        "run_manifest.json",
        "config.resolved",
    ] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("run_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["tool"], "tubelab");
    assert_eq!(manifest["subcommand"], "tube");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 16);
    let csv = std::fs::read_to_string(out_dir.join("confinement.csv")).unwrap();
    assert!(csv.starts_with("eps,j,eig_tube,mu_eff,diff,overlap"));
    // 2 eps x 2 modes + header
    assert_eq!(csv.lines().count(), 5);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tmp("determinism");
    let cfg = write_config(&dir, small_tube_config());
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let (code, _, stderr) = run(&[
            "tube",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {stderr}");
    }
    for f in [
        "confinement.csv",
        "confinement.dat",
        "summary.json",
        "run_manifest.json",
    ] {
        let a = std::fs::read(out_a.join(f)).unwrap();
        let b = std::fs::read(out_b.join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn malformed_config_exits_one_without_partial_outputs() {
    let dir = tmp("badcfg");
    let cfg = write_config(&dir, "[study\nkind = tube\n");
    let out_dir = dir.join("out");
    let (code, _, stderr) = run(&[
        "tube",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 1, "stderr: {stderr}");
    assert!(
        !out_dir.exists(),
        "no outputs may exist after a config error"
    );

    // valid syntax, invalid study: unknown preset name
    let (code2, _, stderr2) = run(&[
        "tube",
        "--preset",
        "does-not-exist",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code2, 1, "stderr: {stderr2}");
    assert!(!out_dir.exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn numerical_failure_exits_two() {
    // an eps large enough to collapse the tube map: beta hits zero
    let dir = tmp("numfail");
    let text = small_tube_config().replace("eps = 0.3 0.15", "eps = 0.9");
    let cfg = write_config(&dir, &text);
    let out_dir = dir.join("out");
    let (code, _, stderr) = run(&[
        "tube",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("degenerates"), "stderr: {stderr}");
    assert!(!out_dir.exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn preset_listing_and_mismatch() {
    let (code, stdout, _) = run(&["presets"]);
    assert_eq!(code, 0);
    for name in ["acc-1", "acc-8", "gamma-demo"] {
        assert!(stdout.contains(name));
    }
    // preset bound to a different subcommand is a validation error
    let dir = tmp("mismatch");
    let (code2, _, stderr) = run(&[
        "effective",
        "--preset",
        "acc-1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code2, 1);
    assert!(stderr.contains("belongs to subcommand"), "stderr: {stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn curve_file_and_mask_roundtrip_through_cli() {
    let dir = tmp("files");
    std::fs::create_dir_all(&dir).unwrap();
    // a curve table with sampled curvature, torsion, alpha
    let mut table = String::from("s kappa tau alpha\n");
    for i in 0..41 {
        let s = i as f64 * 0.05;
        table.push_str(&format!(
            "{s} {} 0.0 0.0\n",
            0.5 * (std::f64::consts::PI * s / 2.0).sin().powi(2)
        ));
    }
    std::fs::write(dir.join("curve.txt"), &table).unwrap();
    // a mask section: a 12 x 9 block with a notch
    let mut mask = String::new();
    for r in 0..9 {
        for c in 0..12 {
            mask.push(if r < 3 && c < 4 { '0' } else { '1' });
        }
        mask.push('\n');
    }
    std::fs::write(dir.join("mask.txt"), &mask).unwrap();
    let cfg_text = "[study]\nkind = effective\nseed = 2\n\n[curve]\nfile = curve.txt\n\n[section]\nshape = mask mask.txt\nh = 0.2\n\n[effective]\nn = 0\nj_max = 2\nhalfwidth = 12\nh = 0.05\n";
    let cfg = write_config(&dir, cfg_text);
    let out_dir = dir.join("out");
    let (code, stdout, stderr) = run(&[
        "effective",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("C_0"));
    assert!(out_dir.join("potential.csv").is_file());
    assert!(out_dir.join("spectrum.csv").is_file());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn gamma_lab_runs_from_config() {
    let dir = tmp("gamma");
    let cfg = write_config(
        &dir,
        "[study]\nkind = gamma-lab\nseed = 3\n\n[gamma-lab]\nfamilies = 9\ndim_max = 16\neps = 0.1 0.05 0.025\n",
    );
    let out_dir = dir.join("out");
    let (code, stdout, stderr) = run(&[
        "gamma-lab",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("criteria agree on all = true"));
    let csv = std::fs::read_to_string(out_dir.join("families.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10); // header + 9 families
    let _ = std::fs::remove_dir_all(&dir);
}
