//! Writes a synthetic survey and respondent panel.
//!
//!     cargo run --example synth_fixture -- [DIR] [QUESTIONS] [RESPONDENTS] [SEED]
//!
//! With no arguments this regenerates the bundled fixture under `fixtures/`.

use std::path::PathBuf;

use opinion_align::synth::{write_fixture, SynthSpec};

fn main() -> std::io::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = args
        .first()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    let mut spec = SynthSpec::default();
    let parse = |i: usize| args.get(i).and_then(|s| s.parse::<u64>().ok());
    if let Some(q) = parse(1) {
        spec.questions = q as usize;
    }
    if let Some(r) = parse(2) {
        spec.respondents = r as usize;
    }
    if let Some(s) = parse(3) {
        spec.seed = s;
    }
    let (schema, microdata) = write_fixture(&dir, &spec)?;
    println!("{}\n{}", schema.display(), microdata.display());
    Ok(())
}
