use std::path::Path;
use std::process::{Command, Output};

use attention_cycles::eval::{run_experiment, ExperimentSpec, Workspace};
use attention_cycles::ingest::{ChannelRecord, DatasetSplit};

fn attcycles(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attcycles"))
        .args(args)
        .output()
        .expect("spawn attcycles")
}

fn ok(args: &[&str]) -> String {
    let out = attcycles(args);
    assert!(
        out.status.success(),
        "attcycles {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// synth, prepare, extract, select, train-video, train-channel, evaluate.
fn full_chain(root: &Path, seed: &str) -> String {
    let raw = root.join("raw");
    let out = root.join("out");
    ok(&[
        "synth",
        "--out",
        s(&raw),
        "--seed",
        seed,
        "--sizes",
        "10,6,6",
        "--max-videos",
        "30",
    ]);
    ok(&[
        "prepare",
        "--out",
        s(&out),
        "--seed",
        seed,
        "--snapshots",
        s(&raw.join("snapshots.jsonl")),
        "--manifest",
        s(&raw.join("manifest.jsonl")),
    ]);
    ok(&["extract", "--out", s(&out)]);
    ok(&["select", "--out", s(&out), "--seed", seed]);
    ok(&["train-video", "--out", s(&out), "--seed", seed]);
    ok(&["train-channel", "--out", s(&out), "--seed", seed]);
    ok(&["evaluate", "--out", s(&out), "--seed", seed])
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn staged_run_matches_library_run() {
    let dir = tempfile::tempdir().unwrap();
    let table = full_chain(dir.path(), "11");
    assert!(table.contains("Majority class"));
    let out = dir.path().join("out");

    let channels: Vec<ChannelRecord> = read(&out.join("corpus.jsonl"))
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let split: DatasetSplit = serde_json::from_str(&read(&out.join("split.json"))).unwrap();
    let spec = ExperimentSpec {
        seed: 11,
        ..Default::default()
    };
    let ws = Workspace::new(&channels, &split, &spec.attention).unwrap();
    let run = run_experiment(&ws, &spec).unwrap();

    let staged: serde_json::Value = serde_json::from_str(&read(&out.join("report.json"))).unwrap();
    let library: serde_json::Value = serde_json::from_str(&run.report.to_json().unwrap()).unwrap();
    assert_eq!(staged, library);

    let rendered = ok(&["report", s(&out.join("report.json"))]);
    assert_eq!(rendered, read(&out.join("report.txt")));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    full_chain(a.path(), "5");
    full_chain(b.path(), "5");
    for name in [
        "corpus.jsonl",
        "split.json",
        "selection.json",
        "video.attention.model.json",
        "video.attention.predictions.jsonl",
        "channel.model.json",
        "report.json",
        "report.txt",
    ] {
        assert_eq!(
            read(&a.path().join("out").join(name)),
            read(&b.path().join("out").join(name)),
            "{name} differs"
        );
    }
}

#[test]
fn ablate_with_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    let out = dir.path().join("out");
    ok(&[
        "synth",
        "--out",
        s(&raw),
        "--seed",
        "3",
        "--sizes",
        "8,6,6",
        "--max-videos",
        "25",
    ]);
    ok(&[
        "prepare",
        "--out",
        s(&out),
        "--snapshots",
        s(&raw.join("snapshots.jsonl")),
        "--manifest",
        s(&raw.join("manifest.jsonl")),
    ]);
    ok(&["extract", "--out", s(&out)]);
    let grid = dir.path().join("grid.toml");
    std::fs::write(
        &grid,
        "[[rows]]\nlabel = \"Views\"\ngroups = [\"attention_avg\", \"attention_agg_pred\"]\nfamilies = [\"views\"]\n\n\
         [[rows]]\nlabel = \"Stats\"\ngroups = [\"attention_stats\"]\n",
    )
    .unwrap();
    let table = ok(&["ablate", "--out", s(&out), "--grid", s(&grid)]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4, "{table}");
    assert!(lines[2].starts_with("Views"));
    assert!(lines[3].starts_with("Stats"));
    assert!(lines[3].contains(" 13 "));
    let json: serde_json::Value = serde_json::from_str(&read(&out.join("ablation.json"))).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    assert_eq!(ok(&["report", s(&out.join("ablation.json"))]), table);
}

#[test]
fn missing_manifest_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let snaps = dir.path().join("snapshots.jsonl");
    std::fs::write(&snaps, "").unwrap();
    let missing = dir.path().join("nope").join("manifest.jsonl");
    let out = attcycles(&[
        "prepare",
        "--out",
        s(&dir.path().join("out")),
        "--snapshots",
        s(&snaps),
        "--manifest",
        s(&missing),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(s(&missing)), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn later_stage_without_inputs_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = attcycles(&["train-channel", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corpus.jsonl"));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(attcycles(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(attcycles(&[]).status.code(), Some(64));
    assert_eq!(attcycles(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_sizes_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = attcycles(&["synth", "--out", s(dir.path()), "--sizes", "3,4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_supplies_paths() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "synth",
        "--out",
        s(&dir.path().join("raw")),
        "--sizes",
        "5,5,4",
        "--max-videos",
        "22",
    ]);
    std::fs::write(
        dir.path().join("run.toml"),
        "snapshots = \"raw/snapshots.jsonl\"\nmanifest = \"raw/manifest.jsonl\"\nout_dir = \"out\"\nseed = 9\n",
    )
    .unwrap();
    ok(&["--config", s(&dir.path().join("run.toml")), "prepare"]);
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("out/prepare.json"))).unwrap();
    assert_eq!(report["kept_channels"], 14);
    assert_eq!(report["seed"], 9);
}
