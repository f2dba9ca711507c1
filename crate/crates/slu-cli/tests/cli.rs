//! End-to-end checks of the `slu` binary: exit codes, determinism,
//! config precedence, wire formats, and input immutability.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn slu(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slu"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawning the slu binary")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = slu(dir, args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process terminated by signal")
}

fn synth(dir: &Path, seed: &str, name: &str, count: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec![
        "synth",
        "--seed",
        seed,
        "--out",
        path.to_str().unwrap(),
        "--count",
        count,
    ];
    args.extend_from_slice(extra);
    run_ok(dir, &args);
    path
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();

    // 0: help and version, on the top level and on subcommands
    assert_eq!(code(&slu(dir, &["--help"])), 0);
    assert_eq!(code(&slu(dir, &["--version"])), 0);
    for sub in [
        "synth",
        "ingest",
        "align",
        "train-slm",
        "train-tagger",
        "train-ranker",
        "train-wcn",
        "rerank",
        "tag",
        "infer",
        "evaluate",
        "report",
    ] {
        assert_eq!(code(&slu(dir, &[sub, "--help"])), 0, "{sub} --help");
    }

    // 1: usage errors
    assert_eq!(code(&slu(dir, &["nosuch"])), 1);
    assert_eq!(code(&slu(dir, &[])), 1);
    assert_eq!(code(&slu(dir, &["rerank", "--input", "x.jsonl"])), 1); // no selector
    assert_eq!(
        code(&slu(
            dir,
            &["rerank", "--input", "x.jsonl", "--model", "a", "--ranker", "b"]
        )),
        1,
        "both selectors"
    );
    assert_eq!(code(&slu(dir, &["synth", "--count", "notanumber"])), 1);

    // 2: data errors
    assert_eq!(code(&slu(dir, &["ingest", "--input", "missing.jsonl"])), 2);
    assert_eq!(code(&slu(dir, &["report", "--dir", dir.to_str().unwrap()])), 2);
    assert_eq!(
        code(&slu(dir, &["evaluate", "--test", "missing.jsonl", "--system", "onebest"])),
        2
    );
}

#[test]
fn synth_is_deterministic_and_seed_sensitive() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let a = synth(dir, "7", "a.jsonl", "40", &[]);
    let b = synth(dir, "7", "b.jsonl", "40", &[]);
    let c = synth(dir, "8", "c.jsonl", "40", &[]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let cfg = dir.join("run.json");
    fs::write(&cfg, r#"{"seed": 7, "synth": {"count": 5}}"#).unwrap();

    run_ok(dir, &["synth", "--config", cfg.to_str().unwrap(), "--out", "from-file.jsonl"]);
    assert_eq!(fs::read_to_string(dir.join("from-file.jsonl")).unwrap().lines().count(), 5);

    run_ok(
        dir,
        &[
            "synth",
            "--config",
            cfg.to_str().unwrap(),
            "--count",
            "3",
            "--out",
            "from-flag.jsonl",
        ],
    );
    assert_eq!(fs::read_to_string(dir.join("from-flag.jsonl")).unwrap().lines().count(), 3);

    // the echo beside the artifact records the resolved values
    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("from-flag.jsonl.config.json")).unwrap())
            .unwrap();
    assert_eq!(echo["count"], 3);
    assert_eq!(echo["seed"], 7);

    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"synth": {"no_such_knob": 1}}"#).unwrap();
    assert_eq!(code(&slu(dir, &["synth", "--config", bad.to_str().unwrap()])), 2);
}

#[test]
fn ingest_filter_drops_unusable_utterances() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let input = dir.join("mixed.jsonl");
    fs::write(
        &input,
        concat!(
            r#"{"id":"good","context":[],"nbest":[{"text":"cheap food"}],"transcript":"cheap food","dialogue_act":"inform","slots":[{"type":"pricerange","start":0,"end":1}]}"#,
            "\n",
            r#"{"id":"no-nbest","context":[],"nbest":[],"transcript":"hello","dialogue_act":"hello","slots":[]}"#,
            "\n",
            r#"{"id":"no-act","context":[],"nbest":[{"text":"bye"}],"transcript":"bye","dialogue_act":"","slots":[]}"#,
            "\n"
        ),
    )
    .unwrap();

    let stdout = run_ok(
        dir,
        &["ingest", "--input", input.to_str().unwrap(), "--out", "kept.jsonl", "--filter"],
    );
    assert!(stdout.contains("kept 1"), "stdout: {stdout}");
    assert_eq!(fs::read_to_string(dir.join("kept.jsonl")).unwrap().lines().count(), 1);

    // without --filter everything is re-emitted
    run_ok(dir, &["ingest", "--input", input.to_str().unwrap(), "--out", "all.jsonl"]);
    assert_eq!(fs::read_to_string(dir.join("all.jsonl")).unwrap().lines().count(), 3);
}

#[test]
fn align_emits_documented_wire_format() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let corpus = synth(dir, "5", "c.jsonl", "25", &[]);
    run_ok(dir, &["align", "--input", corpus.to_str().unwrap(), "--out", "nets.jsonl"]);

    let text = fs::read_to_string(dir.join("nets.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 25);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["id"].is_string());
        let columns = v["network"]["columns"].as_array().unwrap();
        let grid = v["network"]["grid"].as_array().unwrap();
        for col in columns {
            match col["kind"].as_str().unwrap() {
                "anchor" => assert!(col["token"].is_string()),
                "gap" => assert!(col["token"].is_null()),
                other => panic!("unexpected column kind {other}"),
            }
        }
        for row in grid {
            assert_eq!(row.as_array().unwrap().len(), columns.len());
        }
    }
}

#[test]
fn perfect_channel_onebest_report_is_all_zero() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let clean = synth(dir, "11", "clean.jsonl", "200", &["--sub", "0", "--del", "0", "--ins", "0"]);
    run_ok(
        dir,
        &[
            "train-tagger",
            "--train",
            clean.to_str().unwrap(),
            "--dev",
            clean.to_str().unwrap(),
            "--out",
            "tagger.ckpt",
            "--epochs",
            "10",
        ],
    );
    run_ok(
        dir,
        &[
            "evaluate",
            "--test",
            clean.to_str().unwrap(),
            "--system",
            "onebest",
            "--out",
            "reports",
            "--tagger",
            "tagger.ckpt",
        ],
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("reports/report-onebest.json")).unwrap())
            .unwrap();
    assert_eq!(report["wer"], 0.0);
    assert_eq!(report["ser"], 0.0);
    assert_eq!(report["da_acc"], 1.0);
    assert_eq!(report["slot_f1"], 1.0);
    assert_eq!(report["ter"], 0.0);
    assert_eq!(report["fer"], 0.0);
}

#[test]
fn evaluate_requires_the_models_its_systems_need() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let corpus = synth(dir, "5", "c.jsonl", "10", &[]);
    let out = slu(
        dir,
        &["evaluate", "--test", corpus.to_str().unwrap(), "--system", "onebest", "--out", "r"],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--tagger"));
}

#[test]
fn no_subcommand_mutates_its_inputs() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let corpus = synth(dir, "5", "c.jsonl", "30", &[]);
    let before = fs::read(&corpus).unwrap();

    run_ok(dir, &["ingest", "--input", corpus.to_str().unwrap(), "--out", "i.jsonl"]);
    run_ok(dir, &["align", "--input", corpus.to_str().unwrap(), "--out", "n.jsonl"]);
    run_ok(dir, &["train-slm", "--train", corpus.to_str().unwrap(), "--out", "slm.json"]);
    run_ok(
        dir,
        &["rerank", "--input", corpus.to_str().unwrap(), "--model", "slm.json", "--out", "r.jsonl"],
    );

    assert_eq!(fs::read(&corpus).unwrap(), before);
}

#[test]
fn rerank_output_references_existing_hypotheses() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let corpus = synth(dir, "5", "c.jsonl", "30", &[]);
    run_ok(dir, &["train-slm", "--train", corpus.to_str().unwrap(), "--out", "slm.json"]);
    run_ok(
        dir,
        &["rerank", "--input", corpus.to_str().unwrap(), "--model", "slm.json", "--out", "r.jsonl"],
    );

    let corpus_lines: Vec<serde_json::Value> = fs::read_to_string(&corpus)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let picks = fs::read_to_string(dir.join("r.jsonl")).unwrap();
    for (record, line) in corpus_lines.iter().zip(picks.lines()) {
        let pick: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(pick["id"], record["id"]);
        let k = pick["selected"].as_u64().unwrap() as usize;
        let nbest = record["nbest"].as_array().unwrap();
        assert!(k < nbest.len());
        assert_eq!(pick["text"], nbest[k]["text"]);
    }
}
