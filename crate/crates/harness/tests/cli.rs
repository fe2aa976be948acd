//! End-to-end tests of the `penn` binary: real process spawns, real files.

use std::path::Path;
use std::process::{Command, Output};

fn penn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_penn"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn penn");
    assert!(
        out.status.success(),
        "penn exited with {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_usage_error(cmd: &mut Command, needle: &str) {
    let out = cmd.output().expect("spawn penn");
    assert_eq!(
        out.status.code(),
        Some(2),
        "expected usage exit code 2\nstdout:\n{}\nstderr:\n{}",
        stdout_of(&out),
        stderr_of(&out)
    );
    let err = stderr_of(&out);
    assert!(err.contains(needle), "stderr missing {needle:?}:\n{err}");
}

#[test]
fn count_params_prints_exact_numbers() {
    let out = run_ok(penn().args(["count-params", "--model", "penn-bnf"]));
    assert_eq!(stdout_of(&out).trim(), "59105");

    let out = run_ok(penn().args([
        "count-params",
        "--model",
        "penn-bnf",
        "--width-multiplier",
        "4",
    ]));
    assert_eq!(stdout_of(&out).trim(), "924545");

    let out = run_ok(penn().args(["count-params", "--all"]));
    let table = stdout_of(&out);
    for line in [
        "mlp-res 100005",
        "mlp-mul 83777",
        "penn-fcf 120449",
        "penn-bnf 59105",
        "penn-abf 46865",
        "penn-cawf 71873",
    ] {
        assert!(table.contains(line), "missing {line:?} in:\n{table}");
    }
}

#[test]
fn gen_data_is_deterministic_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        run_ok(penn().args([
            "gen-data",
            "--regime",
            "hs",
            "--count",
            "200",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    assert_eq!(bytes_a.iter().filter(|&&c| c == b'\n').count(), 201); // header + rows
}

#[test]
fn usage_errors_exit_with_code_2() {
    // No dataset source.
    assert_usage_error(
        penn().args(["train", "--set", "model=penn-bnf"]),
        "dataset source",
    );
    // Unknown model.
    assert_usage_error(
        penn().args(["train", "--set", "model=resnet50", "--set", "regime=hs"]),
        "unknown model",
    );
    // Unknown config key.
    assert_usage_error(
        penn().args(["train", "--set", "model=penn-bnf", "--set", "regim=hs"]),
        "unknown key",
    );
    // CSV source conflicts with generator keys.
    assert_usage_error(
        penn().args([
            "train",
            "--set",
            "model=penn-bnf",
            "--set",
            "data=deck.csv",
            "--set",
            "gen_count=100",
        ]),
        "conflicts",
    );
    // Unknown regime in gen-data.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    assert_usage_error(
        penn().args(["gen-data", "--regime", "warp", "--count", "5", "--out"])
            .arg(&out),
        "regime",
    );
    // Unknown subcommand is clap's own usage error.
    let out = penn().arg("trian").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn train_into(dir: &Path, deck: &Path, extra: &[&str]) -> Output {
    let mut cmd = penn();
    cmd.args(["train", "--set", "model=penn-bnf", "--set", "width_multiplier=0.25"]);
    cmd.arg("--set").arg(format!("data={}", deck.display()));
    cmd.args(["--set", "epochs=2", "--set", "batch_size=40", "--set", "seed=9"]);
    for flag in extra {
        cmd.arg(flag);
    }
    cmd.arg("--out-dir").arg(dir);
    run_ok(&mut cmd)
}

#[test]
fn train_eval_bench_flow_produces_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let deck = dir.path().join("deck.csv");
    run_ok(penn().args([
        "gen-data",
        "--regime",
        "ls",
        "--count",
        "400",
        "--seed",
        "3",
        "--out",
        deck.to_str().unwrap(),
    ]));

    let run_dir = dir.path().join("run");
    let out = train_into(&run_dir, &deck, &[]);
    let summary = stdout_of(&out);
    assert!(summary.contains("penn-bnf"), "{summary}");
    assert!(summary.contains("test MAPE"), "{summary}");

    for file in ["model.ckpt", "history.csv", "report.csv", "config.txt"] {
        assert!(run_dir.join(file).exists(), "missing {file}");
    }
    let history = std::fs::read_to_string(run_dir.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3); // header + one row per epoch
    assert!(history.starts_with("epoch,lr,train_loss,val_mape"));

    let config_echo = std::fs::read_to_string(run_dir.join("config.txt")).unwrap();
    assert!(config_echo.contains("model = penn-bnf"));
    assert!(config_echo.contains("epochs = 2"));
    assert!(config_echo.contains("seed = 9"));

    let ckpt = run_dir.join("model.ckpt");
    let out = run_ok(penn().args([
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        deck.to_str().unwrap(),
    ]));
    let eval_text = stdout_of(&out);
    assert!(eval_text.contains("MAPE"), "{eval_text}");
    assert!(eval_text.contains("penn-bnf"), "{eval_text}");

    let out = run_ok(penn().args([
        "bench",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        deck.to_str().unwrap(),
        "--passes",
        "50",
    ]));
    let bench_text = stdout_of(&out);
    assert!(bench_text.contains("50 single-sample passes"), "{bench_text}");
}

#[test]
fn training_is_deterministic_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let deck = dir.path().join("deck.csv");
    run_ok(penn().args([
        "gen-data",
        "--regime",
        "hs",
        "--count",
        "300",
        "--seed",
        "11",
        "--out",
        deck.to_str().unwrap(),
    ]));

    let first = dir.path().join("first");
    let second = dir.path().join("second");
    train_into(&first, &deck, &[]);
    train_into(&second, &deck, &[]);

    // The checkpoint and training history are bitwise identical.
    assert_eq!(
        std::fs::read(first.join("model.ckpt")).unwrap(),
        std::fs::read(second.join("model.ckpt")).unwrap()
    );
    assert_eq!(
        std::fs::read_to_string(first.join("history.csv")).unwrap(),
        std::fs::read_to_string(second.join("history.csv")).unwrap()
    );

    // The report matches except for wall-clock fields.
    let parse = |path: &Path| {
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
        let row: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
        header.into_iter().zip(row).collect::<Vec<_>>()
    };
    let (a, b) = (parse(&first.join("report.csv")), parse(&second.join("report.csv")));
    assert_eq!(a.len(), b.len());
    for ((key, va), (_, vb)) in a.iter().zip(&b) {
        if key == "train_seconds" || key == "inference_seconds" {
            continue;
        }
        assert_eq!(va, vb, "column {key} differs");
    }
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let deck = dir.path().join("deck.csv");
    run_ok(penn().args([
        "gen-data",
        "--regime",
        "hs",
        "--count",
        "250",
        "--seed",
        "5",
        "--out",
        deck.to_str().unwrap(),
    ]));

    let env_dir = dir.path().join("from-env");
    let mut cmd = penn();
    cmd.args(["train", "--set", "model=penn-fcf", "--set", "width_multiplier=0.25"]);
    cmd.arg("--set").arg(format!("data={}", deck.display()));
    cmd.args(["--set", "epochs=1"]);
    cmd.env("PENN_OUT_DIR", &env_dir);
    run_ok(&mut cmd);
    assert!(env_dir.join("model.ckpt").exists());
}

#[test]
fn experiment_subcommand_writes_study_csvs() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(penn().args([
        "experiment",
        "scaling",
        "--multipliers",
        "0.25",
        "--seeds",
        "1",
        "--count",
        "250",
        "--epochs",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]));
    let runs = std::fs::read_to_string(dir.path().join("scaling_study_runs.csv")).unwrap();
    assert!(runs.starts_with("multiplier,params,seed,target,test_mape,converged,train_seconds"));
    // One multiplier x both targets x one seed.
    assert_eq!(runs.lines().count(), 3);
    assert!(dir.path().join("scaling_study_means.csv").exists());
}
