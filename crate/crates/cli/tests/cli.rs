//! End-to-end tests of the `fedsim` binary: artifact layout, determinism,
//! overrides, and structured failure modes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fedsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedsim"))
}

fn run(args: &[&str]) -> Output {
    fedsim().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Four-class synthetic-image experiment small enough for test turnaround;
/// includes an attack section so every table is runnable.
fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.cfg");
    std::fs::write(
        &path,
        "[dataset]\n\
         kind = synthetic_images\n\
         num_classes = 4\n\
         train_per_class = 30\n\
         test_per_class = 10\n\
         \n\
         [model]\n\
         arch = softmax\n\
         \n\
         [federation]\n\
         num_agents = 3\n\
         alpha = 1.0\n\
         rounds = 2\n\
         plateau = off\n\
         \n\
         [local]\n\
         epochs = 1\n\
         batch_size = 16\n\
         \n\
         [attack]\n\
         enabled = true\n\
         adversary_samples = 10\n\
         target_class = 1\n\
         \n\
         [defense]\n\
         theta = 2\n\
         \n\
         [run]\n\
         num_runs = 2\n\
         master_seed = 9\n",
    )
    .unwrap();
    path
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn sweep_writes_parseable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_dir = dir.path().join("results");
    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--table",
        "interplay",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let details = fedsim_core::experiment::read_details_csv(&out_dir.join("details.csv")).unwrap();
    // interplay = 2 cells x 2 runs x 2 rounds.
    assert_eq!(details.len(), 8);
    assert!(details.iter().all(|d| d.classwise.len() == 4));

    let rows = fedsim_core::experiment::read_summary_csv(&out_dir.join("summary.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.attack && r.num_runs == 2));

    let md = std::fs::read_to_string(out_dir.join("summary.md")).unwrap();
    assert!(md.contains('\u{b1}'), "{md}");
    // stdout mirrors summary.md.
    assert_eq!(stdout(&out), md);
}

#[test]
fn repeat_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run(&[
            "--config",
            config.to_str().unwrap(),
            "--table",
            "robustness",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for name in ["details.csv", "summary.csv", "summary.md"] {
        assert_eq!(read(&out_a.join(name)), read(&out_b.join(name)), "{name}");
    }
}

#[test]
fn overrides_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let base = dir.path().join("base");
    let reseeded = dir.path().join("reseeded");
    let short = dir.path().join("short");

    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        base.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "77",
        "--out",
        reseeded.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_ne!(
        read(&base.join("summary.csv")),
        read(&reseeded.join("summary.csv"))
    );

    let out = run(&[
        "--config",
        config.to_str().unwrap(),
        "--rounds",
        "1",
        "--alpha",
        "1.0, 0.5",
        "--defense",
        "rlr",
        "--theta",
        "3",
        "--out",
        short.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let details = fedsim_core::experiment::read_details_csv(&short.join("details.csv")).unwrap();
    // 2 alphas x 2 runs x 1 round.
    assert_eq!(details.len(), 4);
    let rows = fedsim_core::experiment::read_summary_csv(&short.join("summary.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows
        .iter()
        .all(|r| r.defense == fedsim_core::flcore::Defense::Rlr { theta: 3 }));
}

#[test]
fn attack_tables_need_attack_section() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clean.cfg");
    std::fs::write(
        &path,
        "[dataset]\nkind = synthetic_images\nnum_classes = 4\n\
         train_per_class = 30\ntest_per_class = 10\n\
         [model]\narch = softmax\n\
         [federation]\nnum_agents = 3\nalpha = 1.0\nrounds = 1\nplateau = off\n\
         [local]\nepochs = 1\n\
         [run]\nnum_runs = 1\n",
    )
    .unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "--table", "robustness"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("[attack]"), "{}", stderr(&out));
}

#[test]
fn structured_errors_on_bad_input() {
    let out = run(&["--config", "/nonexistent/path.cfg"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.cfg");
    std::fs::write(&path, "[dataset]\nkind = synthetic_images\nbogus = 1\n").unwrap();
    let out = run(&["--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));

    let config = write_config(dir.path());
    let out = run(&["--config", config.to_str().unwrap(), "--defense", "firewall"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--defense"), "{}", stderr(&out));

    let out = run(&["--config", config.to_str().unwrap(), "--table", "everything"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("table"), "{}", stderr(&out));
}
