use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn stark(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stark"))
        .args(args)
        .arg(format!("--output_dir={}", out.display()))
        .env_remove("STARK_CONFIG")
        .output()
        .expect("run stark")
}

fn summary(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().last().unwrap_or_else(|| {
        panic!(
            "no output; stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    });
    serde_json::from_str(line).expect("summary line is JSON")
}

#[test]
fn zero_potential_orbit_is_free_flow() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("zero.json");
    let out = stark(&["orbit", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["status"], "ok");
    assert_eq!(s["max_free_flow_deviation"].as_f64(), Some(0.0));
    assert_eq!(s["energy_drift"].as_f64(), Some(0.0));

    let csv = std::fs::read_to_string(dir.path().join("orbit.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("t,x,y_1,y_2,eta,zeta_1,zeta_2,energy,free_flow_deviation")
    );
    assert_eq!(lines.count(), 101);
    // The summary line is also kept as an artifact.
    let saved: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("orbit.json")).unwrap())
            .unwrap();
    assert_eq!(saved, s);
}

#[test]
fn overrides_take_precedence_over_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("zero.json");
    // zero.json gives two transverse components; d = 2 allows only one.
    let out = stark(
        &["orbit", "--config", cfg.to_str().unwrap(), "--dimension=2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(summary(&out)["error"]["kind"], "config");
}

#[test]
fn config_path_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_stark"))
        .args(["orbit", &format!("--output_dir={}", dir.path().display())])
        .env("STARK_CONFIG", config("zero.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out)["max_free_flow_deviation"].as_f64(), Some(0.0));
}

#[test]
fn verify_all_runs_selected_suites() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("quick.json");
    let out = stark(
        &[
            "verify-all",
            "--config",
            cfg.to_str().unwrap(),
            "--verify.suites=[3, 9]",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["passed"], 2);
    assert_eq!(s["failed"], 0);
    assert!(dir.path().join("verify_3_constants.csv").exists());
    assert!(dir.path().join("verify_9_free_case.csv").exists());
    assert!(!dir.path().join("verify_1_eikonal.csv").exists());
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], i32, &str); 4] = [
        (&["orbit", "--orbit.tol=-1"], 2, "config"),
        (&["orbit", "--no_such_field=1"], 2, "config"),
        (&["born", "--born.cutoff=0.5"], 4, "domain"),
        (&["transport", "--transport.xs=[1e-3]"], 3, "budget"),
    ];
    for (args, code, kind) in cases {
        let out = stark(args, dir.path());
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let s = summary(&out);
        assert_eq!(s["status"], "error");
        assert_eq!(s["exit_code"], code);
        assert_eq!(s["error"]["kind"], kind, "{args:?}");
    }
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(stark(&["bogus"], dir.path()).status.code(), Some(2));
}
