use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fhn_lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhn-lab"))
        .args(args)
        .current_dir(dir)
        .env_remove("FHN_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("stderr is JSON")
}

#[test]
fn speed_at_zero_epsilon_is_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = fhn_lab(dir.path(), &["speed", "--a", "0.4", "--gamma", "0.1", "--epsilon", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert!((v["c_lin"].as_f64().unwrap() - 0.9797958971).abs() < 1e-10);
    for k in ["eta_lin", "d10", "d02", "D_eff_plus", "residuals", "checks"] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fhn-lab-out/speed/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["epsilon"], "0");
    assert_eq!(manifest["subcommand"], "speed");
}

#[test]
fn pointwise_kernel_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let o = fhn_lab(
        dir.path(),
        &["contours", "--family", "pointwise", "--j", "0", "--l", "0", "--m", "0"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let linf = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["quantity"].as_str().unwrap().starts_with("Linf"))
        .unwrap();
    assert!((linf["fitted"].as_f64().unwrap() + 0.5).abs() < 0.05, "{linf}");
}

#[test]
fn config_errors_exit_2_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["speed", "--bogus", "1"], "speed.bogus"),
        (&["speed", "--gamma", "abc"], "speed.gamma"),
        (&["wavetrain", "--continue", "L"], "wavetrain.to"),
        (&["contours", "--family", "nope"], "contours.family"),
    ];
    for (args, key) in cases {
        let o = fhn_lab(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let e = stderr_json(&o);
        assert_eq!(e["error"]["kind"], "config");
        assert_eq!(e["error"]["key"], key, "{args:?}");
    }
    assert!(!dir.path().join("fhn-lab-out/speed/manifest.json").exists());
}

#[test]
fn unknown_key_in_config_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# model\na = 0.4\nbeta = 2\n").unwrap();
    let o = fhn_lab(dir.path(), &["speed", "--config", "run.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["key"], "speed.beta");
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fhn-lab"))
        .args(["speed"])
        .current_dir(dir.path())
        .env("FHN_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["key"], "env.FHN_LAB_THREADS");
}

#[test]
fn simulate_reruns_from_manifest_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--x0",
        "-100",
        "--x1",
        "100",
        "--cells",
        "800",
        "--t_end",
        "20",
        "--seed_center",
        "-80",
        "--output_interval",
        "10",
        "--format",
        "both",
        "--out",
        "first",
    ];
    let o = fhn_lab(dir.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = fhn_lab(
        dir.path(),
        &["simulate", "--config", "first/manifest.json", "--out", "second"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "front_track.csv",
        "norms.csv",
        "snapshots/snapshot_0002.csv",
        "fields.fhn1",
        "manifest.json",
    ] {
        let a = std::fs::read(dir.path().join("first").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("second").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
    let csv = std::fs::read_to_string(dir.path().join("first/front_track.csv")).unwrap();
    assert!(csv.starts_with("# fhn-lab csv v1\n"));
    let bin = std::fs::read(dir.path().join("first/fields.fhn1")).unwrap();
    assert_eq!(&bin[..4], b"FHN1");
}

#[test]
fn violated_hypothesis_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // the saddle clip must be small against the connector height squared
    let o = fhn_lab(dir.path(), &["contours", "--family", "pointwise", "--delta0", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "run");
    assert!(dir.path().join("fhn-lab-out/contours/manifest.json").exists());
}

#[test]
fn check_all_prints_one_line_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let o = fhn_lab(dir.path(), &["check-all", "--only", "1,2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS] criterion")).count(), 2);
    assert!(dir.path().join("fhn-lab-out/check-all/checks.json").exists());
}
