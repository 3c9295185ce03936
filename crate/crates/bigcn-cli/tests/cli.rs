//! End-to-end tests of the `bigcn` binary: exit codes, artifact layout,
//! and run reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bigcn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bigcn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_train_eval_early_detect_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = bigcn(
        &[
            "synth",
            "--events",
            "40",
            "--classes",
            "4",
            "--seed",
            "3",
            "--out",
            "corpus",
        ],
        dir.path(),
    );
    assert_success(&out);
    assert!(dir.path().join("corpus/labels.tsv").is_file());

    // Generation is byte-stable across runs.
    let out = bigcn(
        &[
            "synth",
            "--events",
            "40",
            "--classes",
            "4",
            "--seed",
            "3",
            "--out",
            "corpus2",
        ],
        dir.path(),
    );
    assert_success(&out);
    let a = fs::read(dir.path().join("corpus/trees/ev00000.tsv")).unwrap();
    let b = fs::read(dir.path().join("corpus2/trees/ev00000.tsv")).unwrap();
    assert_eq!(a, b);

    let train_args = [
        "train",
        "--data",
        "corpus",
        "--folds",
        "2",
        "--v1",
        "8",
        "--v2",
        "8",
        "--max-epochs",
        "8",
        "--patience",
        "8",
        "--seed",
        "5",
        "--out",
        "run",
    ];
    assert_success(&bigcn(&train_args, dir.path()));
    for file in [
        "run/config.resolved",
        "run/summary.json",
        "run/fold_0/params.bin",
        "run/fold_0/history.csv",
        "run/fold_0/metrics.json",
        "run/fold_0/vocab.txt",
        "run/fold_1/params.bin",
    ] {
        assert!(dir.path().join(file).is_file(), "{file} missing");
    }
    let history = fs::read_to_string(dir.path().join("run/fold_0/history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_loss,val_acc\n"));

    // Identical flags give an identical summary; a config-file rerun too.
    let mut train_args2 = train_args;
    train_args2[train_args.len() - 1] = "run_b";
    assert_success(&bigcn(&train_args2, dir.path()));
    let summary_a = fs::read(dir.path().join("run/summary.json")).unwrap();
    let summary_b = fs::read(dir.path().join("run_b/summary.json")).unwrap();
    assert_eq!(summary_a, summary_b);

    let resolved = fs::read_to_string(dir.path().join("run/config.resolved")).unwrap();
    fs::write(
        dir.path().join("rerun.cfg"),
        resolved.replace("out=run", "out=run_c"),
    )
    .unwrap();
    assert_success(&bigcn(&["train", "--config", "rerun.cfg"], dir.path()));
    let summary_c = fs::read(dir.path().join("run_c/summary.json")).unwrap();
    assert_eq!(summary_a, summary_c);
    let params_a = fs::read(dir.path().join("run/fold_0/params.bin")).unwrap();
    let params_c = fs::read(dir.path().join("run_c/fold_0/params.bin")).unwrap();
    assert_eq!(params_a, params_c);

    let out = bigcn(
        &[
            "eval",
            "--config",
            "run/config.resolved",
            "--params",
            "run/fold_0/params.bin",
        ],
        dir.path(),
    );
    assert_success(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("accuracy"));

    let out = bigcn(
        &[
            "early-detect",
            "--config",
            "run/config.resolved",
            "--params",
            "run/fold_0/params.bin",
            "--deadlines",
            "0,30,600",
        ],
        dir.path(),
    );
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    // Four requested rows plus the infinity sentinel.
    assert_eq!(
        stdout
            .lines()
            .filter(|l| l.starts_with(char::is_numeric))
            .count(),
        3
    );
    assert!(stdout.contains("inf"));
}

#[test]
fn ablation_variant_flags_route_through_training() {
    let dir = tempfile::tempdir().unwrap();
    let out = bigcn(
        &[
            "train",
            "--synthetic",
            "default",
            "--events",
            "24",
            "--variant",
            "td",
            "--no-root",
            "--folds",
            "2",
            "--v1",
            "6",
            "--v2",
            "6",
            "--max-epochs",
            "4",
            "--seed",
            "1",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_success(&out);
    let resolved = fs::read_to_string(dir.path().join("run/config.resolved")).unwrap();
    assert!(resolved.contains("variant=td\n"));
    assert!(resolved.contains("root=false\n"));
}

#[test]
fn gradcheck_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bigcn(&["gradcheck", "--n", "5", "--d", "8"], dir.path());
    assert_success(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("8/8"));

    let out = bigcn(
        &["gradcheck", "--n", "5", "--d", "8", "--force-dropout"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validation_failures_exit_one_usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();

    // No input at all.
    let out = bigcn(&["train", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // Corrupt params file.
    fs::write(dir.path().join("bad.bin"), b"NOPE").unwrap();
    fs::create_dir_all(dir.path().join("corpus/trees")).unwrap();
    fs::write(dir.path().join("corpus/labels.tsv"), "a\tT\n").unwrap();
    fs::write(dir.path().join("corpus/trees/a.tsv"), "n=1\n0\t-1\t0\thi\n").unwrap();
    let out = bigcn(
        &["eval", "--data", "corpus", "--params", "bad.bin"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));

    // Unsorted deadlines.
    let out = bigcn(
        &[
            "early-detect",
            "--data",
            "corpus",
            "--params",
            "bad.bin",
            "--deadlines",
            "60,0",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));

    // Unknown flag is a usage error.
    let out = bigcn(&["train", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // Bad label token in the dataset names the line.
    fs::write(dir.path().join("corpus/labels.tsv"), "a\tX\n").unwrap();
    let out = bigcn(
        &["train", "--data", "corpus", "--folds", "2", "--out", "y"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("label"));
}

#[test]
fn synth_root_only_deadline_pipeline_runs() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&bigcn(
        &[
            "synth",
            "--events",
            "20",
            "--classes",
            "2",
            "--seed",
            "2",
            "--out",
            "c",
        ],
        dir.path(),
    ));
    assert_success(&bigcn(
        &[
            "train",
            "--data",
            "c",
            "--folds",
            "2",
            "--v1",
            "6",
            "--v2",
            "6",
            "--max-epochs",
            "3",
            "--seed",
            "2",
            "--out",
            "r",
        ],
        dir.path(),
    ));
    // Deadline 0 reduces every event to its root; the pipeline must accept
    // the resulting single-node graphs.
    let out = bigcn(
        &[
            "early-detect",
            "--config",
            "r/config.resolved",
            "--params",
            "r/fold_0/params.bin",
            "--deadlines",
            "0",
        ],
        dir.path(),
    );
    assert_success(&out);
}
