use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use checkworthy_core::eval::rank;
use serde_json::Value;
use tempfile::TempDir;

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_checkworthy"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn checkworthy")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = bin(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const TEXT: &str = "The deficit grew by 40 percent in 2012. I love this country. \
We created 12 million jobs last year. Thank you. Taxes rose 5 percent under his plan.";

/// A corpus, embeddings and a small model, built once.
fn workspace() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        ok(&["synth", "--out", "c.jsonl", "--debates", "4", "--sentences", "60", "--seed", "1", "--embeddings-dir", "e", "--dim", "16"], d);
        ok(&["align", "--src", "e/ar.vec", "--tgt", "e/en.vec", "--dict", "e/dict.tsv", "--out", "map.bin"], d);
        ok(
            &[
                "train", "--corpus", "c.jsonl", "--embeddings", "e/en.vec", "--embeddings-ar", "e/ar.vec", "--embeddings-map", "map.bin",
                "--exclude", "debate04", "--out", "m.cwrk", "--epochs", "20", "--lr", "0.01", "--seed", "3", "--topics", "5",
                "--lda-sweeps", "50", "--buckets", "256",
            ],
            d,
        );
        std::fs::write(d.join("in.txt"), TEXT).unwrap();
        dir
    })
    .path()
}

#[test]
fn synth_writes_all_artifacts_deterministically() {
    let d = workspace();
    for f in ["c.jsonl", "e/en.vec", "e/ar.vec", "e/dict.tsv", "e/corpus-ar.jsonl", "map.bin", "m.cwrk"] {
        assert!(d.join(f).exists(), "{f}");
    }
    ok(&["synth", "--out", "again.jsonl", "--debates", "4", "--sentences", "60", "--seed", "1"], d);
    assert_eq!(std::fs::read(d.join("c.jsonl")).unwrap(), std::fs::read(d.join("again.jsonl")).unwrap());
    let lines = std::fs::read_to_string(d.join("c.jsonl")).unwrap().lines().count();
    assert_eq!(lines, 240);
}

#[test]
fn score_sort_matches_rank_of_position_scores() {
    let d = workspace();
    let by_position: Value =
        serde_json::from_str(&ok(&["score", "--model", "m.cwrk", "--input", "in.txt", "--sort", "position", "--format", "json"], d)).unwrap();
    let by_score: Value =
        serde_json::from_str(&ok(&["score", "--model", "m.cwrk", "--input", "in.txt", "--sort", "score", "--format", "json"], d)).unwrap();
    let scores: Vec<f64> = by_position["sentences"].as_array().unwrap().iter().map(|s| s["score"].as_f64().unwrap()).collect();
    let positions: Vec<u64> = by_position["sentences"].as_array().unwrap().iter().map(|s| s["index"].as_u64().unwrap()).collect();
    assert_eq!(positions, [0, 1, 2, 3, 4]);
    let sorted: Vec<usize> = by_score["sentences"].as_array().unwrap().iter().map(|s| s["index"].as_u64().unwrap() as usize).collect();
    assert_eq!(sorted, rank(&scores).unwrap().indices());
    assert_eq!(by_score["language"], "en");
    assert_eq!(by_score["source"], "Any");
}

#[test]
fn score_reads_stdin_and_text_format() {
    let d = workspace();
    let mut child = Command::new(env!("CARGO_BIN_EXE_checkworthy"))
        .args(["score", "--model", "m.cwrk", "--input", "-", "--source", "cnn"])
        .current_dir(d)
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(TEXT.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.splitn(3, '\t').collect()).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.len() == 3 && r[1].parse::<f64>().is_ok()));
    let file = ok(&["score", "--model", "m.cwrk", "--input", "in.txt", "--source", "CNN"], d);
    assert_eq!(text, file);
}

#[test]
fn eval_emits_table_and_json_columns() {
    let d = workspace();
    let out = ok(&["eval", "--model", "m.cwrk", "--corpus", "c.jsonl", "--test-ids", "debate04"], d);
    let header = out.lines().next().unwrap();
    for col in ["MAP", "R-Pr", "P@5", "P@10", "P@20", "P@50"] {
        assert!(header.contains(col), "{header}");
    }
    assert!(out.lines().nth(1).unwrap().starts_with("model"));
    assert!(out.lines().nth(2).unwrap().starts_with("random"));
    let json: Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    for key in ["map", "r_precision", "p_at_5", "p_at_10", "p_at_20", "p_at_50"] {
        let v = json["model"][key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key}={v}");
        assert!(json["random"][key].is_f64());
    }
    let only_json = ok(&["eval", "--model", "m.cwrk", "--corpus", "c.jsonl", "--test-ids", "debate04", "--format", "json"], d);
    assert_eq!(only_json.trim(), out.lines().last().unwrap());
}

#[test]
fn eval_on_renamed_corpus_uses_arabic_path() {
    let d = workspace();
    let out = ok(&["eval", "--model", "m.cwrk", "--corpus", "e/corpus-ar.jsonl", "--test-ids", "debate04-ar", "--format", "json"], d);
    let json: Value = serde_json::from_str(out.trim()).unwrap();
    assert!(json["model"]["map"].as_f64().unwrap() > json["random"]["map"].as_f64().unwrap());
}

#[test]
fn lda_fit_is_deterministic() {
    let d = workspace();
    let args = ["lda-fit", "--corpus", "c.jsonl", "--topics", "3", "--sweeps", "30", "--seed", "2", "--top", "5", "--format", "json"];
    let a = ok(&args, d);
    assert_eq!(a, ok(&args, d));
    let topics: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(topics.as_array().unwrap().len(), 3);
    assert!(topics[0]["terms"].as_array().unwrap().len() <= 5);
}

#[test]
fn usage_errors_exit_2() {
    let d = workspace();
    for args in [
        vec!["frobnicate"],
        vec!["score", "--model", "m.cwrk"],
        vec!["score", "--model", "m.cwrk", "--input", "in.txt", "--sort", "alpha"],
        vec!["score", "--model", "m.cwrk", "--input", "in.txt", "--source", "Reuters"],
        vec!["eval", "--model", "m.cwrk", "--corpus", "c.jsonl"],
    ] {
        let out = bin(&args, d);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn runtime_errors_exit_1() {
    let d = workspace();
    std::fs::write(d.join("garbage.cwrk"), b"not a bundle").unwrap();
    for args in [
        vec!["score", "--model", "missing.cwrk", "--input", "in.txt"],
        vec!["score", "--model", "garbage.cwrk", "--input", "in.txt"],
        vec!["eval", "--model", "m.cwrk", "--corpus", "c.jsonl", "--test-ids", "nope"],
        vec!["synth", "--out", "x.jsonl", "--prevalence", "1.5"],
        vec!["serve", "--model", "missing.cwrk", "--addr", "127.0.0.1:0"],
        vec!["train", "--corpus", "missing.jsonl", "--embeddings", "e/en.vec", "--out", "z.cwrk"],
    ] {
        let out = bin(&args, d);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn help_exits_0() {
    let out = bin(&["--help"], Path::new("."));
    assert_eq!(out.status.code(), Some(0));
    let help = String::from_utf8(out.stdout).unwrap();
    for cmd in ["train", "score", "eval", "align", "lda-fit", "synth", "serve"] {
        assert!(help.contains(cmd), "{cmd}");
    }
}
