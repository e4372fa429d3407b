use std::fs;
use std::process::Command;

fn polaron() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polaron"))
}

const CONFIG: &str = "\
[model]
d = 1
L = 1
n = 4
uv_cutoff = 1
alpha = 1
N = 2, 3
n_max = 4
M = 3, 4

[initial]
psi = cosine
psi.amplitude = 0.3
chi = single-excitation
chi.mode = 1

[integrator]
dt = 0.01
T = 0.1
sample_every = 5

[output]
dir = ignored
";

#[test]
fn compare_writes_bundle_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    let out = |name: &str| dir.path().join(name);
    for name in ["a", "b"] {
        let status = polaron()
            .args(["compare", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out(name))
            .env("POLARON_WORKERS", if name == "a" { "1" } else { "3" })
            .status()
            .unwrap();
        assert!(status.success());
    }
    let summary = fs::read_to_string(out("a").join("summary.json")).unwrap();
    assert_eq!(summary, fs::read_to_string(out("b").join("summary.json")).unwrap());
    let cell = fs::read_to_string(out("a").join("cells/N3_M4/distance.csv")).unwrap();
    assert_eq!(cell, fs::read_to_string(out("b").join("cells/N3_M4/distance.csv")).unwrap());
    assert!(cell.starts_with("t,distance_bogoliubov"));
    let json: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(json["mode"], "compare");
    assert_eq!(json["cells"].as_array().unwrap().len(), 4);
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn single_stage_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    for (cmd, file) in [
        ("lp-evolve", "lp/diagnostics.csv"),
        ("exact-evolve", "exact/N2/observables.csv"),
        ("bog-evolve", "bogoliubov/M3/observables.csv"),
    ] {
        let out = dir.path().join(cmd);
        let status = polaron().arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert!(status.success(), "{cmd}");
        assert!(out.join(file).exists(), "{cmd}: {file}");
    }
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = polaron().args(["check", "--suite", "weyl", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS shift property"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("check.json")).unwrap()).unwrap();
    assert_eq!(report[0]["pass"], true);

    let bad = polaron().args(["check", "--suite", "gravity"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown check suite"));
}

#[test]
fn config_errors_report_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, CONFIG.replace("alpha = 1", "alpha = strong")).unwrap();
    let out = polaron().arg("lp-evolve").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6"));
}
