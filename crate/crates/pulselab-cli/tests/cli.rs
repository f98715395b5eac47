//! End-to-end tests of the experiment runner: presets, validation errors
//! with their exit codes, manifest contents, and byte reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pulselab"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pulselab-cli-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn read_manifest(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("manifest.json")).expect("manifest.json");
    serde_json::from_str(&text).expect("valid manifest json")
}

#[test]
fn fig10_pulse_preset_reproduces_published_constants() {
    let out = tmp_dir("fig10");
    let status = bin()
        .args(["--preset", "fig10-pulse", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let manifest = read_manifest(&out);
    let summary = &manifest["summary"];
    let pstar = summary["pstar"].as_f64().unwrap();
    let a = summary["a"].as_f64().unwrap();
    assert!((pstar - 1.9463).abs() <= 1e-4, "pstar = {pstar}");
    assert!((a - 2.2705).abs() <= 1e-3, "a = {a}");

    for file in ["profile.csv", "pulse_rescaled.csv", "pulse.json"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    // Manifest hashes cover the emitted files.
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["path"] == "profile.csv"));
    for f in files {
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
    }
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn fig4_simulate_preset_emits_trace_and_period() {
    let out = tmp_dir("fig4sim");
    let status = bin()
        .args(["--preset", "fig4-simulate", "--emit-plots", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = read_manifest(&out);
    let period = manifest["summary"]["period"].as_f64().unwrap();
    assert!(period > 1.0 && period < 1.01, "period {period}");
    let header = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,A,Q,G\n"));
    assert!(out.join("metrics.json").exists());
    assert!(out.join("harmonics.csv").exists());
    assert!(out.join("trace.gp").exists());
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn malformed_config_is_rejected_without_output() {
    let out = tmp_dir("badcfg");
    let cfg = out.join("config.json");
    fs::create_dir_all(&out).unwrap();
    // Missing T.
    fs::write(
        &cfg,
        r#"{"model":"prototype","parameters":{"gamma":200.0,"kappa":0.5,"mu":0.5,"q0":1.0,"beta":1.0,"s":1.0,"k":1.0,"g0":3.1,"alpha":1.0},"run":"simulate"}"#,
    )
    .unwrap();
    let run_dir = out.join("run");
    let output = bin().arg("--config").arg(&cfg).arg("--out").arg(&run_dir).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("missing parameter 'T'"), "stderr: {stderr}");
    assert!(!run_dir.exists(), "no files may be written on validation failure");
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn unknown_parameter_is_named() {
    let out = tmp_dir("unknownparam");
    let cfg = out.join("config.json");
    fs::create_dir_all(&out).unwrap();
    // tau_death does not belong to the two-species reduced model.
    fs::write(
        &cfg,
        r#"{"model":"reducedA","parameters":{"gamma":100.0,"T":1.0,"kappa":0.5,"k":1.0,"g0":2.5,"alpha":1.0,"tau_death":2.0},"run":"cascade"}"#,
    )
    .unwrap();
    let output = bin().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("tau_death"), "stderr: {stderr}");
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn scaling_without_gammas_is_rejected() {
    let out = tmp_dir("nogammas");
    let cfg = out.join("config.json");
    fs::create_dir_all(&out).unwrap();
    fs::write(
        &cfg,
        r#"{"model":"prototype","parameters":{"gamma":200.0,"T":1.0,"kappa":0.5,"mu":0.5,"q0":1.0,"beta":1.0,"s":1.0,"k":1.0,"g0":3.1,"alpha":1.0},"run":"scaling"}"#,
    )
    .unwrap();
    let output = bin().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let base = tmp_dir("repro");
    let cfg = base.join("config.json");
    fs::create_dir_all(&base).unwrap();
    fs::write(
        &cfg,
        r#"{
            "model": "reducedB",
            "parameters": {"gamma": 60.0, "T": 1.0, "kappa": 0.5, "k": 1.0, "g0": 2.5, "alpha": 1.0},
            "run": "cascade",
            "options": {"n_max": 3}
        }"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "2"] {
        let dir = base.join(format!("w{workers}"));
        let status = bin()
            .arg("--config")
            .arg(&cfg)
            .args(["--workers", workers, "--out"])
            .arg(&dir)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(dir.join("cascade_zero.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let _ = fs::remove_dir_all(&base);
}

#[test]
fn env_var_overrides_out_flag() {
    let base = tmp_dir("envvar");
    let env_dir = base.join("from-env");
    let flag_dir = base.join("from-flag");
    let status = bin()
        .args(["--preset", "fig4-cascade", "--out"])
        .arg(&flag_dir)
        .env("PULSELAB_OUT", &env_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(env_dir.join("manifest.json").exists());
    assert!(!flag_dir.exists());
    let _ = fs::remove_dir_all(&base);
}

#[test]
fn numerical_failure_exits_with_code_3() {
    let out = tmp_dir("numfail");
    let cfg = out.join("config.json");
    fs::create_dir_all(&out).unwrap();
    // The competing model has no fast-limit pulse reduction, so a pulse run
    // fails numerically (not a config validation error).
    fs::write(
        &cfg,
        r#"{"model":"competingFast","parameters":{"gamma":200.0,"T":1.0,"nu":2.0,"r":3.0,"alpha":0.3,"m":0.1,"kappa":2.0,"mu":1.0,"s":3.0,"k":4.0,"f":0.05,"beta":1.0,"g0":0.6,"tau_death":2.0},"run":"pulse"}"#,
    )
    .unwrap();
    let output = bin().arg("--config").arg(&cfg).arg("--out").arg(out.join("run")).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn spectrum_run_emits_roots_per_extra_g0() {
    let out = tmp_dir("specg0");
    let cfg = out.join("config.json");
    fs::create_dir_all(&out).unwrap();
    fs::write(
        &cfg,
        r#"{
            "model": "prototype",
            "parameters": {"gamma": 100.0, "T": 1.0, "kappa": 0.5, "mu": 0.5, "q0": 1.0,
                           "beta": 1.0, "s": 1.0, "k": 1.0, "g0": 3.1, "alpha": 1.0},
            "run": "spectrum",
            "options": {
                "g0_list": [2.9],
                "box": {"x_min": -0.5, "x_max": 0.3, "omega_max": 20.0, "nx": 60, "ny": 60}
            }
        }"#,
    )
    .unwrap();
    let run_dir = out.join("run");
    let status = bin().arg("--config").arg(&cfg).arg("--out").arg(&run_dir).status().unwrap();
    assert!(status.success());
    for file in ["roots_zero.csv", "roots_positive.csv", "roots_zero_1.csv", "weak_zero.csv", "strong_positive.csv"] {
        assert!(run_dir.join(file).exists(), "{file} missing");
    }
    // Below the threshold there is no positive equilibrium to scan.
    assert!(!run_dir.join("roots_positive_1.csv").exists());
    let roots = fs::read_to_string(run_dir.join("roots_zero.csv")).unwrap();
    assert!(roots.starts_with("re,im,residual,class\n"));
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn preset_list_prints_names() {
    let output = bin().args(["--preset", "list"]).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    for name in ["fig4-simulate", "fig7-simulate", "fig8-scaling", "fig10-pulse"] {
        assert!(text.contains(name), "{name} missing from list");
    }
}
