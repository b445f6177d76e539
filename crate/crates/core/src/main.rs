use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use opinion_align::human::WeightingMode;
use opinion_align::probe::ProbeCache;
use opinion_align::report::{
    build_providers, compute_results, probe_models, run, write_distributions, write_errors, write_human_tables,
    Dataset, RunConfig, RunMode, Study,
};

#[derive(Parser)]
#[command(
    name = "opinion-align",
    version,
    about = "Score how closely a language model's survey answers match human opinion groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run config (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Probe cache file.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Seed for the option-permutation robustness run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_in_flight: Option<usize>,
    #[arg(long, global = true)]
    steering_subset_size: Option<usize>,
    #[arg(long, global = true, value_parser = ["survey-weights", "uniform"])]
    weighting: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the surveys and microdata.
    Ingest,
    /// Write human opinion distributions and baselines.
    Humans,
    /// Query every configured model and fill the probe cache.
    Probe,
    /// Compute metrics from cached probes and print them as JSON.
    Metrics,
    /// Emit every table from cached probes without calling any provider.
    Report,
    /// Full pipeline: ingest, humans, probe, metrics, report.
    Run,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let Some(path) = &cli.config else {
        bail!("--config <PATH> is required");
    };
    let mut config = RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(dir) = &cli.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(cache) = &cli.cache {
        config.cache_path = Some(cache.clone());
    }
    if let Some(seed) = cli.seed {
        config.robustness.seed = seed;
    }
    if let Some(n) = cli.max_in_flight {
        config.concurrency.max_in_flight = n;
    }
    if let Some(n) = cli.steering_subset_size {
        config.steering_subset_size = n;
    }
    if let Some(w) = &cli.weighting {
        config.weighting = if w == "uniform" {
            WeightingMode::Uniform
        } else {
            WeightingMode::SurveyWeights
        };
    }
    config.validate()?;
    Ok(config)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let config = load_config(&cli)?;
    match cli.command {
        Command::Ingest => {
            let data = Dataset::load(&config)?;
            for s in &data.surveys {
                println!("{}: {} questions", s.survey_id, s.questions.len());
            }
            println!("respondents: {}", data.respondents());
            let attrs: Vec<&str> = data.attributes().iter().map(|a| a.name.as_str()).collect();
            println!("attributes: {}", attrs.join(", "));
            let taxonomy = data.taxonomy();
            let topics: Vec<&str> = taxonomy.iter().collect();
            println!("topics: {}", topics.join(", "));
        }
        Command::Humans => {
            let study = Study::prepare(config)?;
            for f in write_human_tables(&study, &study.config.output_dir)? {
                println!("{}", f.display());
            }
        }
        Command::Probe => {
            let study = Study::prepare(config)?;
            let cache_path = study.config.cache_file();
            let cache = ProbeCache::open(&cache_path).with_context(|| format!("opening {}", cache_path.display()))?;
            let providers = build_providers(&study, RunMode::Online);
            let (probes, calls) = probe_models(&study, providers, &cache, RunMode::Online);
            let out = &study.config.output_dir;
            let dists = probes.iter().flat_map(|p| p.default.values());
            write_distributions(&out.join("model_distributions.csv"), dists)?;
            write_errors(&out.join("errors.csv"), probes.iter().flat_map(|p| &p.errors))?;
            let errors: usize = probes.iter().map(|p| p.errors.len()).sum();
            println!(
                "provider calls: {calls}, cached records: {}, errors: {errors}",
                cache.len()
            );
        }
        Command::Metrics => {
            let study = Study::prepare(config)?;
            let cache_path = study.config.cache_file();
            let cache = ProbeCache::open(&cache_path).with_context(|| format!("opening {}", cache_path.display()))?;
            let providers = build_providers(&study, RunMode::Offline);
            let (probes, _) = probe_models(&study, providers, &cache, RunMode::Offline);
            let results: Vec<_> = probes.iter().map(|p| compute_results(&study, p)).collect();
            println!("{}", serde_json::to_string_pretty(&results)?);
        }
        Command::Report | Command::Run => {
            let mode = if matches!(cli.command, Command::Run) {
                RunMode::Online
            } else {
                RunMode::Offline
            };
            let summary = run(&config, mode)?;
            for f in &summary.files {
                println!("{}", f.display());
            }
            eprintln!("provider calls: {}, errors: {}", summary.provider_calls, summary.errors);
        }
    }
    Ok(())
}
