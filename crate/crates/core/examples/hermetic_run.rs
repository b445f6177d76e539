//! Full offline run over a synthetic survey with mock models, followed by a
//! warm-cache rerun that makes no provider calls.

use opinion_align::report::{run, ModelConfig, ProviderConfig, RunConfig, RunMode};
use opinion_align::synth::{write_fixture, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("opinion-align-hermetic");
    let _ = std::fs::remove_dir_all(&dir);
    let (schema, microdata) = write_fixture(&dir.join("data"), &SynthSpec::default())?;

    let mut config = RunConfig::new(schema, microdata, dir.join("out"));
    config.models = vec![
        ModelConfig {
            id: "uniform".into(),
            provider: ProviderConfig::Uniform,
            top_k: 100,
        },
        ModelConfig {
            id: "mimic-liberal".into(),
            provider: ProviderConfig::GroupMimic {
                attribute: "POLIDEOLOGY".into(),
                group: "Liberal".into(),
                steerable: true,
                fallback: Default::default(),
            },
            top_k: 100,
        },
        ModelConfig {
            id: "down".into(),
            provider: ProviderConfig::Failing {
                message: "simulated outage".into(),
            },
            top_k: 100,
        },
    ];
    config.robustness.permute = true;
    config.concurrency.retry.base_delay = std::time::Duration::from_millis(1);

    let first = run(&config, RunMode::Online)?;
    println!(
        "first run: {} provider calls, {} recorded errors",
        first.provider_calls, first.errors
    );
    for r in &first.results {
        println!("  {:<14} overall R {:?}", r.report.model_id, r.report.overall_r);
    }
    let second = run(&config, RunMode::Online)?;
    println!("rerun: {} provider calls", second.provider_calls);
    println!("tables in {}", first.output_dir.display());
    Ok(())
}
