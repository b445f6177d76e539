//! Querying a provider through the cache, bounding labels outside the top K
//! and extracting an opinion distribution with its refusal rate.

use std::collections::BTreeMap;

use opinion_align::distribution::Provenance;
use opinion_align::probe::mock::FixedMapMock;
use opinion_align::probe::{
    bound_missing_options, build_prompt, extract_distribution, query_logprobs, total_assigned_mass, Counted,
    InstructionVariant, ProbeCache, QuerySettings, SteeringContext,
};
use opinion_align::survey::{OptionKind, OptionSpec, Question};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = Question::new(
        "Q",
        "Is the economy improving?",
        vec!["economy".into()],
        vec![
            OptionSpec::new("A", "Yes, a lot", OptionKind::Ordinal),
            OptionSpec::new("B", "Somewhat", OptionKind::Ordinal),
            OptionSpec::new("C", "No", OptionKind::Ordinal),
            OptionSpec::new("D", "Refused", OptionKind::Refusal),
        ],
        "example",
    )?;
    let prompt = build_prompt(&q, &SteeringContext::none(), InstructionVariant::None, &[0, 1, 2])?;

    // The provider only returns its three most likely tokens, so " C" is cut.
    let tokens: BTreeMap<String, f64> = [(" A", -1.0), (" B", -1.2), (" C", -3.5), (" D", -4.0), (" The", -2.0)]
        .into_iter()
        .map(|(t, lp)| (t.to_string(), lp))
        .collect();
    let provider = Counted::new(FixedMapMock::new("fixed-demo", tokens));
    let cache = ProbeCache::in_memory();
    let settings = QuerySettings {
        top_k: 3,
        ..Default::default()
    };
    let result = query_logprobs(&provider, &prompt, &cache, &settings)?;
    let again = query_logprobs(&provider, &prompt, &cache, &settings)?;
    assert_eq!(result, again);
    println!(
        "returned labels {:?}; provider calls {}",
        result.logprobs,
        provider.calls()
    );
    println!(
        "assigned mass {:.4}",
        total_assigned_mass(&result, &prompt.presentation)
    );

    let bounded = bound_missing_options(&result, &prompt.presentation.expected_labels())?;
    println!(
        "bounded {:?}, completed mass {:.4}",
        bounded.bounded,
        bounded.total_mass()
    );
    let dist = extract_distribution(
        &bounded.logprobs,
        &q,
        &prompt.presentation,
        Provenance::Model {
            model_id: "fixed-demo".into(),
            context: "default".into(),
        },
    )?;
    println!("probs {:?}, refusal {:?}", dist.probs, dist.refusal_rate);
    Ok(())
}
