//! End-to-end checks of the `textloc` binary: exit codes, determinism,
//! and the index/train/rank/eval flow on a small fixture tree.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_textloc"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Ten widget files, six reports, and a changelog whose messages mention
/// the report ids.
fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().expect("tempdir");
    let src = dir.path().join("src");
    let reports = dir.path().join("reports");
    fs::create_dir_all(&src).expect("mkdir");
    fs::create_dir_all(&reports).expect("mkdir");
    for i in 0..10 {
        fs::write(
            src.join(format!("Widget{i}.java")),
            format!(
                "// widget {i} implementation\nclass Widget{i} {{\n    void render() {{ int marker{i}signal = {i}; }}\n}}\n"
            ),
        )
        .expect("write source");
    }
    let mut changelog = String::new();
    for i in 0..6 {
        fs::write(
            reports.join(format!("r{i}.txt")),
            format!(
                "Id: 1000{i}\nTitle: marker{i}signal crashes the renderer\nDate: 2005-0{}-10\nComponent: ui\n\nThe widget fails whenever marker{i}signal is touched.\n",
                i + 1
            ),
        )
        .expect("write report");
        changelog.push_str(&format!(
            "date: 2005-0{}-20\nfile: src/Widget{i}.java\nmessage:\nfix bug 1000{i} in widget {i}\n---\n",
            i + 1
        ));
    }
    fs::write(dir.path().join("changelog.txt"), changelog).expect("write changelog");
    dir
}

fn common_args(root: &Path) -> Vec<String> {
    [
        "--corpus",
        root.to_str().expect("utf8 path"),
        "--changelog",
        root.join("changelog.txt").to_str().expect("utf8 path"),
        "--reports",
        root.join("reports").to_str().expect("utf8 path"),
    ]
    .iter()
    .map(ToString::to_string)
    .collect()
}

#[test]
fn index_is_deterministic() {
    let dir = fixture();
    let index = |path: &PathBuf| {
        let out = bin()
            .arg("index")
            .args(common_args(dir.path()))
            .args(["--index", path.to_str().expect("utf8 path")])
            .output()
            .expect("run");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(path).expect("read index")
    };
    let a = index(&dir.path().join("a.idx"));
    let b = index(&dir.path().join("b.idx"));
    assert_eq!(a, b, "two runs produced different index bytes");
}

#[test]
fn train_rank_eval_flow() {
    let dir = fixture();
    let index_path = dir.path().join("corpus.idx");
    let model_path = dir.path().join("model.tsv");
    let run = |args: &[&str]| {
        let out = bin().args(args).output().expect("run");
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        stdout(&out)
    };
    let common = common_args(dir.path());
    let common: Vec<&str> = common.iter().map(String::as_str).collect();

    let mut args = vec!["index"];
    args.extend(&common);
    args.extend(["--index", index_path.to_str().expect("utf8")]);
    assert!(run(&args).contains("documents\t16")); // 10 sources + 6 reports

    let mut args = vec!["train"];
    args.extend(&common);
    args.extend(["--model", model_path.to_str().expect("utf8"), "--negatives", "5", "--train-fraction", "0.5"]);
    let out = run(&args);
    assert!(out.contains("training-score"), "{out}");
    assert!(model_path.exists());

    let report = dir.path().join("reports/r2.txt");
    let mut args = vec![
        "rank",
        "--index",
        index_path.to_str().expect("utf8"),
        "--model",
        model_path.to_str().expect("utf8"),
        "--top",
        "3",
    ];
    args.push(report.to_str().expect("utf8"));
    let first = run(&args);
    assert!(first.lines().nth(1).expect("row").ends_with("src/Widget2.java"), "{first}");
    assert_eq!(first, run(&args), "rank output not deterministic");

    let mut args = vec!["eval"];
    args.extend(&common);
    args.extend(["--model", model_path.to_str().expect("utf8"), "--train-fraction", "0.5"]);
    let out = run(&args);
    assert!(out.contains("aggregate\t90.0000"), "{out}");
}

#[test]
fn rank_top_zero_prints_header_only() {
    let dir = fixture();
    let index_path = dir.path().join("corpus.idx");
    let model_path = dir.path().join("model.tsv");
    let out = bin()
        .arg("index")
        .args(common_args(dir.path()))
        .args(["--index", index_path.to_str().expect("utf8")])
        .output()
        .expect("run");
    assert!(out.status.success());
    fs::write(&model_path, "title\tmethod_bodies\t1\n").expect("write model");
    let out = bin()
        .args([
            "rank",
            "--index",
            index_path.to_str().expect("utf8"),
            "--model",
            model_path.to_str().expect("utf8"),
            "--top",
            "0",
        ])
        .arg(dir.path().join("reports/r0.txt"))
        .output()
        .expect("run");
    assert!(out.status.success());
    assert_eq!(stdout(&out), "rank\tvalue\tpath\n");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = fixture();
    let index_a = dir.path().join("a.idx");
    let index_b = dir.path().join("b.idx");
    let config = dir.path().join("run.conf");
    fs::write(
        &config,
        format!(
            "# fixture settings\ncorpus = {}\nchangelog = {}\nindex = {}\n",
            dir.path().display(),
            dir.path().join("changelog.txt").display(),
            index_a.display(),
        ),
    )
    .expect("write config");
    let out = bin()
        .args(["index", "--config", config.to_str().expect("utf8")])
        .output()
        .expect("run");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(index_a.exists());

    // the flag overrides the config file's index path
    let out = bin()
        .args(["index", "--config", config.to_str().expect("utf8")])
        .args(["--index", index_b.to_str().expect("utf8")])
        .output()
        .expect("run");
    assert!(out.status.success());
    assert!(index_b.exists());
}

#[test]
fn exit_codes() {
    // missing required flag -> usage error, exit 1
    let out = bin().arg("index").output().expect("run");
    assert_eq!(out.status.code(), Some(1));

    // unreadable corpus -> configuration error, exit 1
    let dir = fixture();
    let out = bin()
        .args(["index", "--corpus", "/nonexistent/nowhere", "--index"])
        .arg(dir.path().join("x.idx"))
        .output()
        .expect("run");
    assert_eq!(out.status.code(), Some(1));

    // corpus with no minable links -> data error, exit 2
    let empty_log = dir.path().join("empty.txt");
    fs::write(&empty_log, "").expect("write");
    let out = bin()
        .args(["eval", "--model", "missing.tsv"])
        .args(["--corpus", dir.path().to_str().expect("utf8")])
        .args(["--changelog", empty_log.to_str().expect("utf8")])
        .args(["--reports", dir.path().join("reports").to_str().expect("utf8")])
        .output()
        .expect("run");
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
