use std::path::Path;
use std::process::{Command, Output};

fn artibot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_artibot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.toml");
    let text = format!(
        "seed = 5\n\n[paths]\ndb = \"snake.db\"\nsnake_checkpoint = \"snake.acwt\"\nhexapod_checkpoint = \"hex.acwt\"\nreports = \"reports\"\nworlds = \"worlds\"\n\n{extra}"
    );
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[db]\ntrails = 3\n");
    let out = artibot(&["generate-db", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = artibot(&["generate-db", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_checkpoint_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    for cmd in ["eval-hexapod", "eval-snake", "compare"] {
        let out = artibot(&[cmd, "--config", &cfg]);
        assert_eq!(out.status.code(), Some(3), "{cmd}");
    }
    let out = artibot(&["train-snake", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn infeasible_world_is_an_environment_fault() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[db]\ntrials = 1\nduration = 0.1\n\n[world]\ndensity = 5000.0\n");
    let out = artibot(&["generate-db", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn small_snake_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[db]\ntrials = 3\nduration = 3.0\n\n[snake_train]\nepisodes = 12\n\n[compare]\npairs = 2\nduration = 1.0\n",
    );
    let out = artibot(&["generate-db", "--config", &cfg, "--deterministic"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(dir.path().join("snake.db")).unwrap();

    let out = artibot(&["generate-db", "--config", &cfg, "--workers", "3"]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(dir.path().join("snake.db")).unwrap(), first);

    let out = artibot(&["train-snake", "--config", &cfg, "--deterministic"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("reports/train-snake.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 12);
    for line in report.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["episode", "worker", "loss_pi", "loss_v", "entropy", "reward_sum", "staleness", "version"] {
            assert!(v.get(key).is_some(), "{key} missing in {line}");
        }
    }

    let out = artibot(&["compare", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["pairs"].as_array().unwrap().len(), 2);
    let full: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("reports/compare.json")).unwrap()).unwrap();
    assert_eq!(full["config"]["seed"], 5);
    assert!(full["fingerprint"].as_str().unwrap().len() == 16);
    assert_eq!(std::fs::read_dir(dir.path().join("worlds")).unwrap().count(), 2);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[db]\ntrials = 1\nduration = 0.5\n");
    assert!(artibot(&["generate-db", "--config", &cfg]).status.success());
    let a = std::fs::read(dir.path().join("snake.db")).unwrap();
    assert!(artibot(&["generate-db", "--config", &cfg, "--seed", "6"]).status.success());
    let b = std::fs::read(dir.path().join("snake.db")).unwrap();
    assert_ne!(a, b);
}
