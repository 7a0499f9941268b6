use std::path::Path;
use std::process::{Command, Output};

use mre_core::evaluation::EvaluationRecord;

fn mre(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mre"))
        .current_dir(dir)
        .args(args)
        .env_remove("OPENAI_API_KEY")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const DATASET: &str = r#"{"context_id":"c1","context":"p","answer":"a","question":"Who wrote the novel?","annotations":[1,1]}
{"context_id":"c1","context":"p","answer":"a","question":"Which author wrote the novel?","annotations":[1,1]}
{"context_id":"c1","context":"p","answer":"a","question":"Who wrote the poem?","annotations":[0,0]}
"#;

const REFS: &str = r#"{"source_question":"Who wrote the novel?","model":"m","mode":"zero_shot","temperature":0.5,"paraphrases":["Which author wrote the novel?"]}
"#;

#[test]
fn score_uses_matching_paraphrase() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.jsonl", DATASET);
    write(dir.path(), "r.jsonl", REFS);
    let out = mre(dir.path(), &["score", "--dataset", "d.jsonl", "--refs", "r.jsonl", "--out", "s.jsonl"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let records: Vec<EvaluationRecord> = std::fs::read_to_string(dir.path().join("s.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 2);
    let hit = records.iter().find(|r| r.candidate == "Which author wrote the novel?").unwrap();
    let bleu = &hit.scores[&"bleu4".parse().unwrap()];
    assert_eq!((bleu.mre, bleu.best_reference_index), (1.0, 1));
    assert!(bleu.sre < 1.0);
}

#[test]
fn correlate_perfect_mre() {
    let dir = tempfile::tempdir().unwrap();
    let lines: String = [(1.0, 0.0, 1.0), (0.0, 0.5, 0.5), (1.0, 0.5, 1.0), (0.0, 0.0, 0.5)]
        .iter()
        .enumerate()
        .map(|(i, (h, s, m))| {
            format!(
                "{{\"context_id\":\"c{i}\",\"candidate\":\"q\",\"human_score\":{h},\"scores\":{{\"rouge_l\":{{\"sre\":{s},\"mre\":{m},\"best_reference_index\":0}}}}}}\n"
            )
        })
        .collect();
    write(dir.path(), "s.jsonl", &lines);
    let out = mre(dir.path(), &["correlate", "--scored", "s.jsonl", "--out", "c.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(report["correlations"]["rows"]["rouge_l"]["mre_pearson"], 1.0);
    assert_eq!(report["correlations"]["rows"]["rouge_l"]["sre_pearson"], 0.0);
    assert!(std::fs::read_to_string(dir.path().join("c.txt")).unwrap().contains("rouge_l"));
}

#[test]
fn sweep_needs_reference_scores() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "s.jsonl",
        "{\"context_id\":\"c\",\"candidate\":\"q\",\"human_score\":1.0,\"scores\":{\"bleu4\":{\"sre\":0.0,\"mre\":1.0,\"best_reference_index\":1}}}\n",
    );
    let out = mre(dir.path(), &["sweep", "--scored", "s.jsonl", "--out", "w.json"]);
    assert!(!out.status.success());
}

#[test]
fn refuses_bad_paths() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.jsonl", DATASET);
    write(dir.path(), "r.jsonl", REFS);
    let missing = mre(dir.path(), &["score", "--dataset", "nope.jsonl", "--refs", "r.jsonl", "--out", "s.jsonl"]);
    assert!(!missing.status.success());
    assert!(stderr(&missing).contains("does not exist"));
    let clobber = mre(dir.path(), &["score", "--dataset", "d.jsonl", "--refs", "r.jsonl", "--out", "d.jsonl"]);
    assert!(!clobber.status.success());
    assert!(stderr(&clobber).contains("would overwrite"));
    assert_eq!(std::fs::read_to_string(dir.path().join("d.jsonl")).unwrap(), DATASET);
}

#[test]
fn rejects_unknown_metric_and_unusable_flags() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.jsonl", DATASET);
    write(dir.path(), "r.jsonl", REFS);
    let base = ["score", "--dataset", "d.jsonl", "--refs", "r.jsonl", "--out", "s.jsonl"];
    let unknown = mre(dir.path(), &[&base[..], &["--metrics", "bleu5"]].concat());
    assert!(!unknown.status.success());
    let idf = mre(dir.path(), &[&base[..], &["--idf"]].concat());
    assert!(stderr(&idf).contains("--idf needs --embeddings"));
    let needs_provider = mre(dir.path(), &[&base[..], &["--metrics", "bertscore"]].concat());
    assert!(stderr(&needs_provider).contains("embedding provider"));
    assert!(!dir.path().join("s.jsonl").exists());
}

#[test]
fn schema_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.jsonl", &format!("{DATASET}{{\"context_id\":\"c2\"}}\n"));
    write(dir.path(), "r.jsonl", REFS);
    let out = mre(dir.path(), &["score", "--dataset", "d.jsonl", "--refs", "r.jsonl", "--out", "s.jsonl"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("d.jsonl:4"), "{}", stderr(&out));
}

#[test]
fn augment_without_credentials_fails() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.jsonl", DATASET);
    let out = mre(dir.path(), &["augment", "--dataset", "d.jsonl", "--out", "r.jsonl"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("OPENAI_API_KEY"), "{}", stderr(&out));
}

#[test]
fn replay_without_fixture_fails_per_question() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.jsonl", DATASET);
    std::fs::create_dir(dir.path().join("fx")).unwrap();
    let out = mre(dir.path(), &["augment", "--dataset", "d.jsonl", "--replay", "fx", "--out", "r.jsonl"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("1 augmentation(s) failed") && err.contains("no recorded completion"), "{err}");
}

#[test]
fn synth_then_replay_with_cache() {
    let dir = tempfile::tempdir().unwrap();
    let ok = |o: Output| assert!(o.status.success(), "{}", stderr(&o));
    ok(mre(dir.path(), &["synth", "--out", "s", "--seed", "3", "--mode", "few", "--n", "10"]));
    let args = [
        "augment",
        "--dataset",
        "s/dataset.jsonl",
        "--replay",
        "s/fixtures",
        "--mode",
        "few",
        "--n",
        "10",
        "--cache",
        "cache.jsonl",
    ];
    ok(mre(dir.path(), &[&args[..], &["--out", "r1.jsonl"]].concat()));
    // second run is served from the cache even without fixtures
    std::fs::remove_dir_all(dir.path().join("s/fixtures")).unwrap();
    std::fs::create_dir(dir.path().join("s/fixtures")).unwrap();
    ok(mre(dir.path(), &[&args[..], &["--out", "r2.jsonl"]].concat()));
    let r1 = std::fs::read(dir.path().join("r1.jsonl")).unwrap();
    assert_eq!(r1, std::fs::read(dir.path().join("r2.jsonl")).unwrap());
    let first: serde_json::Value = serde_json::from_slice(r1.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(first["mode"], "few_shot");
    assert_eq!(first["paraphrases"].as_array().unwrap().len(), 10);
}
