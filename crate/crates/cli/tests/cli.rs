use std::path::Path;
use std::process::{Command, Output};

fn sparsekit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsekit"))
        .args(args)
        .current_dir(dir)
        .env_remove("SPARSEKIT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_example1_recovers_sparse_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.json");
    let o = sparsekit(
        &["solve", "example1", "--weight", "100,100,1,1", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let x: Vec<f64> = serde_json::from_value(v["x"].clone()).unwrap();
    for (a, b) in x.iter().zip([0.0, 0.0, 2.0, 1.0]) {
        assert!((a - b).abs() <= 1e-4, "{x:?}");
    }
    assert_eq!(v["sparsity"], 2);
    assert!((v["objective"].as_f64().unwrap() - 3.0).abs() <= 1e-4);
    assert!(v["residuals"]["infeasibility"].as_f64().unwrap() <= 1e-7);
    assert!(v["config"].is_object());
}

#[test]
fn solve_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = sparsekit(&["solve", "example1", "--algorithm", "dra6", "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["label"], "dra6");
    assert_eq!(v["x"].as_array().unwrap().len(), 4);
}

#[test]
fn missing_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = sparsekit(&["solve", "does-not-exist.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_usage_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sparsekit(&["solve"], dir.path()).status.code(), Some(2));
    assert_eq!(
        sparsekit(&["solve", "example1", "--algorithm", "nope"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        sparsekit(&["sweep", "--sparsity", "9..3", "--trials", "1"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn verify_example1_reports_strict_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = sparsekit(&["verify", "example1", "--weight", "100,100,1,1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("P* = {3,4}, Q* = {1,2}"), "{s}");
    assert!(s.contains("constructions agree: true"), "{s}");

    let o = sparsekit(&["verify", "example1", "--weight", "100,100,1,1", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["strict_pair"]["p_star"], serde_json::json!([3, 4]));
    assert_eq!(v["strict_pair"]["q_star"], serde_json::json!([1, 2]));
    assert!(v["kkt"]["max_residual"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn verify_zero_weight_reports_precondition() {
    let dir = tempfile::tempdir().unwrap();
    let o = sparsekit(&["verify", "example1", "--weight", "0,100,1,1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("precondition failed"));
}

#[test]
fn verify_generated_instance_small_kkt_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = sparsekit(
        &[
            "generate", "--case", "10,30,5", "--sparsity", "3", "--seed", "11",
            "--reject-large-c1", "--out", "inst.json",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let w = vec!["1"; 30].join(",");
    let o = sparsekit(&["verify", "inst.json", "--weight", &w, "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["kkt"]["max_residual"].as_f64().unwrap() <= 1e-5, "{}", v["kkt"]);
}

#[test]
fn sweep_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "sweep", "--case", "20,60,5", "--sparsity", "2..4", "--trials", "3", "--algs",
            "l1,dra6:k=2", "--seed", "7", "--out", out,
        ]
    };
    let o = sparsekit(&args("a.csv"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(sparsekit(&args("b.csv"), dir.path()).status.code(), Some(0));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert!(dir.path().join("a.svg").exists());
}

#[test]
fn sweep_seed_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, out: &str| {
        Command::new(env!("CARGO_BIN_EXE_sparsekit"))
            .args(["sweep", "--case", "10,30,0", "--sparsity", "2..2", "--trials", "2"])
            .args(["--algs", "l1", "--out", out])
            .current_dir(dir.path())
            .env("SPARSEKIT_SEED", seed)
            .output()
            .unwrap()
    };
    assert!(run("5", "e.csv").status.success());
    let head = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert!(head.lines().next().unwrap().contains("seed=5"), "{head}");
}
