use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use percept_core::corpus::synth::{synthetic_pool, PoolSpec};
use percept_core::corpus::{clean_document, load_jsonl, save_jsonl, NewsDocument};
use serde_json::{json, Value};

fn percept(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_percept")).args(args).current_dir(cwd).output().expect("spawn percept")
}

fn ok(out: &Output) -> PathBuf {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    PathBuf::from(String::from_utf8_lossy(&out.stdout).trim())
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

/// A cleaned pool large enough for the default sampling quotas.
fn write_pool(dir: &Path) -> PathBuf {
    let pool = synthetic_pool(&PoolSpec { sentences: 1, ..Default::default() }, 3);
    let docs: Vec<NewsDocument> = pool.articles.iter().map(|a| clean_document(a).unwrap()).collect();
    let path = dir.join("pool.jsonl");
    save_jsonl(&path, &docs).unwrap();
    path
}

#[test]
fn sample_writes_outputs_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = write_pool(tmp.path());
    let config = tmp.path().join("c.json");
    std::fs::write(&config, json!({"seed": 5, "paths": {"corpus": pool, "output_dir": tmp.path().join("runs")}}).to_string())
        .unwrap();

    let dir = ok(&percept(&["sample", "--config", config.to_str().unwrap()], tmp.path()));
    assert!(dir.starts_with(tmp.path().join("runs")));
    assert!(dir.file_name().unwrap().to_string_lossy().starts_with("sample-"));
    let sampled: Vec<NewsDocument> = load_jsonl(dir.join("sampled.jsonl")).unwrap();
    assert_eq!(sampled.len(), 940);

    let manifest = read_json(&dir.join("manifest.json"));
    assert_eq!(manifest["subcommand"], "sample");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["sample"]["seed"], 5);
    assert_eq!(manifest["inputs"][0]["path"], pool.to_str().unwrap());
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(outputs, ["sample_steps.json", "sampled.jsonl"]);
    assert!(manifest["versions"]["percept"].is_string());
    assert!(manifest["warnings"].as_array().unwrap().is_empty());

    // A second run gets a fresh directory.
    let again = ok(&percept(&["sample", "--config", config.to_str().unwrap()], tmp.path()));
    assert_ne!(dir, again);

    // Re-running from the manifest reproduces the outputs byte for byte.
    let rerun = ok(&percept(
        &["sample", "--config", dir.join("manifest.json").to_str().unwrap(), "--output", "rerun"],
        tmp.path(),
    ));
    assert_eq!(
        std::fs::read(dir.join("sampled.jsonl")).unwrap(),
        std::fs::read(tmp.path().join(rerun).join("sampled.jsonl")).unwrap()
    );
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = write_pool(tmp.path());
    let config = tmp.path().join("c.json");
    std::fs::write(&config, json!({"seed": 5, "paths": {"corpus": pool}}).to_string()).unwrap();
    let dir = ok(&percept(&["sample", "--config", config.to_str().unwrap(), "--seed", "9", "--output", "out"], tmp.path()));
    let manifest = read_json(&tmp.path().join(dir).join("manifest.json"));
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["sample"]["seed"], 9);
}

#[test]
fn usage_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = percept(&["sample", "--no-such-flag"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = percept(&["frobnicate"], tmp.path());
    assert!(!out.status.success());

    let out = percept(&["sample"], tmp.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
    assert!(stderr.contains("paths.corpus"));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed": 1, "unknown_key": 2}"#).unwrap();
    let out = percept(&["sample", "--config", bad.to_str().unwrap()], tmp.path());
    assert!(!out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stderr).trim().lines().count(), 1);
}

#[test]
fn heavy_backend_needs_a_model_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = percept(&["train", "--backend", "heavy", "--output", "o"], tmp.path());
    assert!(!out.status.success());
}

#[test]
fn stages_chain_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let pipe = ok(&percept(&["pipeline", "--synthetic", "--seed", "2", "--output", "pipe"], root));
    let pipe = root.join(pipe);
    let model = pipe.join("train/model");
    assert!(model.join("metadata.json").exists());
    assert!(model.join("predictors.json").exists());

    let corpus = pipe.join("sample/sampled.jsonl");
    let annotations = pipe.join("simulate/annotations.jsonl");
    let participants = pipe.join("simulate/participants.jsonl");
    let config = root.join("c.json");
    std::fs::write(
        &config,
        json!({
            "seed": 2,
            "paths": {
                "corpus": corpus, "annotations": annotations, "participants": participants,
                "posts": pipe.join("inputs/posts.jsonl"), "split": pipe.join("split/split.json"),
            },
            "study": {"dimensions": ["Importance"]},
        })
        .to_string(),
    )
    .unwrap();
    let c = config.to_str().unwrap();
    let m = model.to_str().unwrap();

    let eval = root.join(ok(&percept(&["evaluate", "--config", c, "--model", m, "--output", "eval"], root)));
    let standalone = read_csv(&eval.join("evaluation.csv"));
    let chained = read_csv(&pipe.join("evaluate/evaluation.csv"));
    assert_eq!(standalone.len(), chained.len());
    for (a, b) in standalone.iter().zip(&chained) {
        assert_eq!(a[0], b[0]);
        assert_eq!(a[2], b[2]);
        let (x, y): (f64, f64) = (a[1].parse().unwrap(), b[1].parse().unwrap());
        assert!((x - y).abs() < 1e-9, "{}: {x} vs {y}", a[0]);
    }

    let score = root.join(ok(&percept(&["score", "--model", m, "--text", "A fun surprising study", "--output", "s"], root)));
    let line: Value = serde_json::from_str(std::fs::read_to_string(score.join("scores.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(line["statement_scores"].as_object().unwrap().len(), 25);
    assert_eq!(line["profile"].as_object().unwrap().len(), 12);

    for cmd in ["aggregate", "reliability", "split", "study-perception", "study-engagement"] {
        let dir = root.join(ok(&percept(&[cmd, "--config", c, "--model", m, "--output", cmd], root)));
        assert!(dir.join("manifest.json").exists(), "{cmd}");
    }
    assert_eq!(
        std::fs::read(root.join("split/split.json")).unwrap(),
        std::fs::read(pipe.join("split/split.json")).unwrap()
    );
    assert!(root.join("study-perception/perception/Importance.csv").exists());
    assert_eq!(
        std::fs::read(root.join("study-engagement/predictors.json")).unwrap(),
        std::fs::read(pipe.join("study/predictors.json")).unwrap()
    );
}

#[test]
fn clean_and_simulate_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let pool = synthetic_pool(&PoolSpec { papers_per_setting: 4, single_type_papers: 2, popular_papers: 0, ..Default::default() }, 1);
    let raw = root.join("raw.jsonl");
    save_jsonl(&raw, &pool.articles).unwrap();
    let config = root.join("c.json");
    std::fs::write(&config, json!({"paths": {"raw": raw}, "simulate": {"participants": 8}}).to_string()).unwrap();
    let cleaned = root.join(ok(&percept(&["clean", "--config", config.to_str().unwrap(), "--output", "clean"], root)));
    let docs: Vec<NewsDocument> = load_jsonl(cleaned.join("cleaned.jsonl")).unwrap();
    assert_eq!(docs.len(), pool.articles.len());
    assert!(docs.iter().all(|d| !d.body.contains("https://")));

    std::fs::write(
        &config,
        json!({"paths": {"corpus": cleaned.join("cleaned.jsonl")}, "simulate": {"participants": 8}}).to_string(),
    )
    .unwrap();
    let sim = root.join(ok(&percept(&["simulate", "--config", config.to_str().unwrap(), "--output", "sim"], root)));
    let n = std::fs::read_to_string(sim.join("annotations.jsonl")).unwrap().lines().count();
    assert_eq!(n, docs.len() * 4);
}
