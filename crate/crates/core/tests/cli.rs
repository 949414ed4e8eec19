use std::process::Command;

fn ripless() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ripless"))
}

#[test]
fn run_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"kind": "ensemble_compare",
            "ensembles": [{"family": "gaussian", "n": 32}, {"family": "subsampled_dft", "n": 32}],
            "grid": {"n": [32], "s": [2], "m": [16]}, "trials": 5, "seed": 8}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = ripless().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).args(["--threads", "2"]).status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("ensemble_compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("subsampled_dft"));
    for ext in ["json", "dat", "gp", "config.json"] {
        assert!(out.join(format!("ensemble_compare.{ext}")).exists(), "{ext}");
    }
    let replay = ripless()
        .args(["replay", "--result"])
        .arg(out.join("ensemble_compare.csv"))
        .args(["--cell", "1", "--trial", "4"])
        .output()
        .unwrap();
    assert!(replay.status.success());
    let v: serde_json::Value = serde_json::from_slice(&replay.stdout).unwrap();
    assert_eq!(v["ensemble"], "subsampled_dft");
    assert_eq!(v["detail"]["trial"], 4);
}

#[test]
fn solve_certify_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    std::fs::write(&problem, r#"{"a": [[1, 0, 1], [0, 1, 1]], "y": [1, 1], "sigma_m": 0.1}"#).unwrap();
    let out = ripless().args(["solve", "--program", "dantzig", "--problem"]).arg(&problem).args(["--lambda", "1"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["penalty"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    assert_eq!(v["result"]["x_hat"].as_array().unwrap().len(), 3);

    let out = ripless()
        .args(["certify", "--ensemble", r#"{"family": "gaussian", "n": 16}"#, "--n", "16", "--s", "1", "--m", "800"])
        .args(["--trials", "3", "--seed", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert!(v[0]["q_norms"].is_array() && v[0]["batches_used"].is_number());

    let grid = dir.path().join("grid.json");
    std::fs::write(&grid, r#"{"ensemble": {"family": "binary", "n": 16}, "n": [16], "s": [2], "m": [64, 128]}"#).unwrap();
    let out = ripless().args(["estimate", "--which", "e1", "--grid"]).arg(&grid).args(["--trials", "50", "--seed", "1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    for col in ["empirical_rate", "bound", "ci_upper", "pass"] {
        assert!(header.split(',').any(|c| c == col), "{col}");
    }
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn bad_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kind": "phase_transition", "ensemble": {"family": "gaussian", "n": 8}, "grid": {"n": [], "s": [1], "m": [4]}, "trials": 1, "seed": 0}"#).unwrap();
    let status = ripless().args(["run", "--config"]).arg(&cfg).status().unwrap();
    assert!(!status.success());
}
