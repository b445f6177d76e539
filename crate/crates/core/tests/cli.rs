use std::path::Path;
use std::process::Command;

use opinion_align::report::RunConfig;

const BIN: &str = env!("CARGO_BIN_EXE_opinion-align");

fn fixture_config() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/config.toml")
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

#[test]
fn requires_config() {
    let out = cli(&["ingest"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn ingest_summarizes_fixture() {
    let config = fixture_config();
    let out = cli(&["ingest", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("SYNTH: 20 questions"));
    assert!(text.contains("respondents: 800"));
}

#[test]
fn run_then_offline_report_and_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture_config();
    let out_dir = tmp.path().join("out");
    let base = [
        "--config",
        config.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ];

    let out = cli(&[&["humans"][..], &base].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("human_distributions.csv").exists());

    let out = cli(&[&["run"][..], &base, &["--max-in-flight", "2"]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = std::fs::read(out_dir.join("representativeness.csv")).unwrap();

    let out = cli(&[&["report"][..], &base].concat());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("provider calls: 0"));
    assert_eq!(std::fs::read(out_dir.join("representativeness.csv")).unwrap(), rep);

    let out = cli(&[&["metrics"][..], &base].concat());
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
}

#[test]
fn config_rejects_unknown_keys_and_resolves_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.toml");
    std::fs::write(&path, "output_dir = \"o\"\nbogus = 1\n").unwrap();
    assert!(RunConfig::load(&path).is_err());

    let config = RunConfig::load(fixture_config()).unwrap();
    assert!(config.surveys[0].schema.is_absolute());
    assert_eq!(config.models.len(), 3);
    assert_eq!(config.hash(), RunConfig::load(fixture_config()).unwrap().hash());
}
