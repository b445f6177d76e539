use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use opinion_align::report::{run, ModelConfig, ProviderConfig, RunConfig, RunMode, TABLES};
use opinion_align::synth::{write_fixture, SynthSpec};

fn small_spec() -> SynthSpec {
    SynthSpec {
        questions: 8,
        respondents: 300,
        ..Default::default()
    }
}

fn model(id: &str, provider: ProviderConfig) -> ModelConfig {
    ModelConfig {
        id: id.into(),
        provider,
        top_k: 100,
    }
}

fn config(dir: &Path, models: Vec<ModelConfig>) -> RunConfig {
    let (schema, microdata) = write_fixture(&dir.join("data"), &small_spec()).unwrap();
    let mut c = RunConfig::new(schema, microdata, dir.join("out"));
    c.models = models;
    c.concurrency.retry.base_delay = std::time::Duration::from_millis(1);
    c
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                if p.file_name().unwrap() != "cache" {
                    stack.push(p);
                }
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn rerun_from_warm_cache_is_identical_and_offline() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(
        tmp.path(),
        vec![
            model("uniform", ProviderConfig::Uniform),
            model(
                "mimic",
                ProviderConfig::GroupMimic {
                    attribute: "SEX".into(),
                    group: "Female".into(),
                    steerable: true,
                    fallback: Default::default(),
                },
            ),
        ],
    );
    let first = run(&c, RunMode::Online).unwrap();
    assert!(first.provider_calls > 0);
    assert_eq!(first.errors, 0);
    let before = snapshot(&c.output_dir);
    for t in TABLES {
        assert!(before.contains_key(Path::new(t)), "missing {t}");
    }

    let second = run(&c, RunMode::Offline).unwrap();
    assert_eq!(second.provider_calls, 0);
    assert_eq!(snapshot(&c.output_dir), before);

    let rep = rows(&c.output_dir.join("representativeness.csv"));
    assert_eq!(rep.len(), 2);
    assert_eq!(rep[0][0], "uniform");
    assert_eq!(rep[1][0], "mimic");
}

#[test]
fn failing_model_is_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(
        tmp.path(),
        vec![
            model("uniform", ProviderConfig::Uniform),
            model("down", ProviderConfig::Failing { message: "boom".into() }),
        ],
    );
    let summary = run(&c, RunMode::Online).unwrap();
    assert!(summary.errors > 0);
    let errors = rows(&c.output_dir.join("errors.csv"));
    assert!(errors.iter().all(|r| r[0] == "down"));
    let rep = rows(&c.output_dir.join("representativeness.csv"));
    let uniform = rep.iter().find(|r| r[0] == "uniform").unwrap();
    assert!(uniform[1].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn no_models_writes_manifest_only() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), vec![]);
    let summary = run(&c, RunMode::Offline).unwrap();
    assert_eq!(summary.provider_calls, 0);
    assert!(c.output_dir.join("manifest.json").exists());
    assert!(!c.output_dir.join("representativeness.csv").exists());
}

#[test]
fn offline_cache_miss_is_recorded_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), vec![model("uniform", ProviderConfig::Uniform)]);
    let summary = run(&c, RunMode::Offline).unwrap();
    assert_eq!(summary.provider_calls, 0);
    assert!(summary.errors > 0);
}

#[test]
fn manifest_records_config_hash_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = config(tmp.path(), vec![model("uniform", ProviderConfig::Uniform)]);
    c.robustness.seed = 99;
    run(&c, RunMode::Online).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(c.output_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["config_hash"], c.hash());
}
