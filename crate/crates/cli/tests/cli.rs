//! End-to-end tests of the `swarm` binary: exit codes, file outputs, and the
//! interfaces the checkpoints and CSVs promise.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn swarm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarm"))
        .args(args)
        .env_remove("SWARM_SEED")
        .output()
        .expect("binary runs")
}

fn write_tiny_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let body = format!(
        r#"{{
            "n_agents": 2,
            "n_food": 2,
            "predator_enabled": false,
            "episode_length": 100,
            "ppo": {{"max_steps": 1500, "buffer_size": 256, "hidden_units": 8, "summary_freq": 500}}
            {extra}
        }}"#
    );
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn train_gom_writes_checkpoint_with_obs_dim_121() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path(), "");
    let out = swarm(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--model",
        "gom",
        "--seed",
        "1",
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ckpt: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/checkpoint.json")).unwrap())
            .unwrap();
    assert_eq!(ckpt["obs_dim"], 121);
    assert_eq!(ckpt["model_kind"], "gom");
    assert!(dir.path().join("run/reward_curve.csv").exists());
    assert!(dir.path().join("run/manifest.json").exists());
}

#[test]
fn train_lom_checkpoint_has_obs_dim_114() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path(), "");
    let out = swarm(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--model",
        "lom",
        "--seed",
        "1",
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ckpt: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/checkpoint.json")).unwrap())
            .unwrap();
    assert_eq!(ckpt["obs_dim"], 114);
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = swarm(&[
        "train",
        "--config",
        "/nonexistent/config.json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_config_exits_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"n_agents": 0}"#).unwrap();
    let out = swarm(&["validate-config", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("n_agents"), "{stderr}");
}

#[test]
fn validate_config_ok_prints_digest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ok.json");
    fs::write(&path, r#"{"n_agents": 5}"#).unwrap();
    let out = swarm(&["validate-config", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("digest"));
}

#[test]
fn eval_boids_writes_metrics_csv() {
    let dir = tempfile::tempdir().unwrap();
    let metrics = dir.path().join("metrics.csv");
    let out = swarm(&[
        "eval",
        "--boids",
        "--steps",
        "500",
        "--agents",
        "15",
        "--seed",
        "3",
        "--metrics-out",
        metrics.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&metrics).unwrap();
    assert!(csv.starts_with("tick,alignment_err"));
    // one header + one aggregated summary row (run shorter than a 10k window)
    assert_eq!(csv.trim_end().lines().count(), 2);
}

#[test]
fn eval_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let metrics = dir.path().join(name);
        let out = swarm(&[
            "eval",
            "--boids",
            "--steps",
            "400",
            "--seed",
            "11",
            "--metrics-out",
            metrics.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        fs::read(metrics).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn eval_population_size_agnostic_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path(), "");
    let run_dir = dir.path().join("run");
    let out = swarm(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--model",
        "lom",
        "--seed",
        "2",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    // evaluate the 2-agent-trained checkpoint with a different population
    let metrics = dir.path().join("m.csv");
    let out = swarm(&[
        "eval",
        "--checkpoint",
        run_dir.join("checkpoint.json").to_str().unwrap(),
        "--steps",
        "200",
        "--agents",
        "7",
        "--seed",
        "1",
        "--metrics-out",
        metrics.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn checkpoint_ray_mismatch_reports_both_dims() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path(), "");
    let run_dir = dir.path().join("run");
    let out = swarm(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--model",
        "lom",
        "--seed",
        "2",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    // a config with fewer rays shrinks the observation: load must abort
    let narrow = dir.path().join("narrow.json");
    fs::write(&narrow, r#"{"raycast": {"n_rays": 10}}"#).unwrap();
    let out = swarm(&[
        "eval",
        "--config",
        narrow.to_str().unwrap(),
        "--checkpoint",
        run_dir.join("checkpoint.json").to_str().unwrap(),
        "--steps",
        "10",
        "--metrics-out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("114") && stderr.contains("66"), "{stderr}");
}

#[test]
fn describe_obs_lists_full_layout() {
    let out = swarm(&["describe-obs", "--model", "gom"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("length 121"));
    assert!(stdout.contains("predator_distance"));
    // header comment + csv header + 121 rows
    assert_eq!(stdout.trim_end().lines().count(), 123);
}

#[test]
fn env_seed_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let m1 = dir.path().join("m1.csv");
    let m2 = dir.path().join("m2.csv");
    let m3 = dir.path().join("m3.csv");
    let run = |metrics: &Path, env_seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_swarm"));
        cmd.args([
            "eval",
            "--boids",
            "--steps",
            "300",
            "--metrics-out",
            metrics.to_str().unwrap(),
        ]);
        match env_seed {
            Some(s) => cmd.env("SWARM_SEED", s),
            None => cmd.env_remove("SWARM_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
    };
    run(&m1, Some("99"));
    run(&m2, Some("99"));
    run(&m3, None);
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
    assert_ne!(fs::read(&m1).unwrap(), fs::read(&m3).unwrap());
}

#[test]
fn experiment_grid_continues_past_failures() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    // population 0 is an invalid cell; the boids cells still run
    fs::write(
        &grid,
        r#"{
            "models": ["boids"],
            "populations": [5, 0],
            "seeds": [1],
            "eval_steps": 200
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("runs");
    let out = swarm(&[
        "experiment",
        "--grid",
        grid.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let comparison = fs::read_to_string(out_dir.join("comparison.csv")).unwrap();
    assert_eq!(comparison.trim_end().lines().count(), 3);
    assert!(comparison.contains("boids,5,1,ok"));
    assert!(comparison.contains("boids,0,1,failed"));
    assert!(out_dir.join("boids_5_s1/metrics.csv").exists());
}

#[test]
fn experiment_grid_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    fs::write(
        &grid,
        r#"{"models": ["boids"], "populations": [5], "seeds": [1, 2], "eval_steps": 150}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = swarm(&[
            "experiment",
            "--grid",
            grid.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        fs::read_to_string(out_dir.join("comparison.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}
