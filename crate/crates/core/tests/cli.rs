use std::path::Path;
use std::process::{Command, Output};

use polymer_core::{free_energy, log_partition, ConstraintMask, Environment, PolymerParams, RunManifest, Vertex};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polymer-lab")).args(args).env_remove("POLYMER_LAB_WORKERS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no {key} line in {text}"))
        .parse()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

const MINIMAL: &str = r#"{
    "model": "polymer",
    "dimension": 2,
    "distribution": {"kind": "constant", "value": 1.0},
    "sizes": [8],
    "replicates": 1,
    "master_seed": 1,
    "estimators": {"shape": {}}
}"#;

#[test]
fn generate_then_free_energy_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let env_path = dir.path().join("env.csv");
    let env_arg = env_path.display().to_string();
    let o = lab(&["generate", "--dist", "exponential:1", "--corner", "6,5", "--seed", "4", "--out", &env_arg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let o = lab(&["free-energy", "--env", &env_arg, "--target", "6,5", "--beta", "0.5"]);
    assert!(o.status.success());
    let env = Environment::generate_on(&"exponential:1".parse().unwrap(), &Vertex(vec![6, 5]), 4).unwrap();
    let f = log_partition(&env, PolymerParams::new(0.5).unwrap(), &Vertex::origin(2), &ConstraintMask::Full).unwrap();
    let expected = free_energy(&f, &Vertex(vec![6, 5])).unwrap();
    assert_eq!(field(&stdout(&o), "free_energy"), expected);

    let o = lab(&["free-energy", "--env", &env_arg, "--target", "6,5", "--beta", "0.5", "--through", "2,2;4,3"]);
    assert!(o.status.success());
    assert!(field(&stdout(&o), "free_energy") >= expected);

    let o = lab(&["lpp", "--env", &env_arg, "--target", "(6,5)"]);
    assert!(o.status.success());
    let o = lab(&["free-energy", "--env", &env_arg, "--target", "9,9"]);
    assert!(!o.status.success());
}

#[test]
fn minimal_run_writes_a_verifiable_manifest_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("run");
    let out_arg = out.display().to_string();
    let o = lab(&["run", "--config", &cfg, "--out", &out_arg, "--workers", "2", "--report", "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (manifest, root) = RunManifest::load(&out).unwrap();
    assert!(manifest.is_complete());
    assert_eq!(manifest.workers, 2);
    for f in manifest.files.iter().chain(&manifest.report_files) {
        f.verify(&root).unwrap();
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("estimator,quantity,estimate,se,ci_lo,ci_hi,window,r_squared,note\n"));
    assert_eq!(summary.lines().filter(|l| l.starts_with("shape,")).count(), 1);
    assert!(out.join("report.md").exists());
    assert!(out.join("plots").join("shape_fan.csv").exists());
    assert!(out.join("plots").join("shape_fan.svg").exists());

    std::fs::write(out.join("summary.csv"), "tampered").unwrap();
    let o = lab(&["report", "--run", &out_arg]);
    assert!(!o.status.success());
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &MINIMAL.replace("\"sizes\"", "\"size\""));
    let o = lab(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("size"));
}

#[test]
fn degenerate_estimates_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chi").display().to_string();
    let o = lab(&[
        "estimate",
        "chi",
        "--model",
        "lpp",
        "--dimension",
        "2",
        "--dist",
        "constant:1",
        "--sizes",
        "4,8,16",
        "--replicates",
        "3",
        "--seed",
        "1",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn check_relation_reports_a_verdict() {
    let o = lab(&["check-relation", "--chi", "0.3333333333333333", "--xi", "0.6666666666666666", "--kappa", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(field(&text, "residual"), 0.0);
    assert!(text.contains("consistent"));
}

#[test]
fn worker_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "model": "lpp",
        "dimension": 2,
        "distribution": {"kind": "exponential", "rate": 1.0},
        "sizes": [4, 8, 16],
        "replicates": 12,
        "master_seed": 21,
        "estimators": {"chi": {}, "xi": {}, "mean_excess": {}}
    }"#;
    let cfg = write_config(dir.path(), body);
    let mut outputs = Vec::new();
    for w in ["1", "3"] {
        let out = dir.path().join(format!("w{w}")).display().to_string();
        let o = Command::new(env!("CARGO_BIN_EXE_polymer-lab"))
            .args(["run", "--config", &cfg, "--out", &out])
            .env("POLYMER_LAB_WORKERS", w)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let (m, _) = RunManifest::load(Path::new(&out)).unwrap();
        assert_eq!(m.workers.to_string(), w);
        outputs.push(m.files.iter().map(|f| (f.path.clone(), f.sha256.clone())).collect::<Vec<_>>());
    }
    let csv = |v: &Vec<(String, String)>| v.iter().filter(|(p, _)| p.ends_with(".csv")).cloned().collect::<Vec<_>>();
    assert_eq!(csv(&outputs[0]), csv(&outputs[1]));
}
