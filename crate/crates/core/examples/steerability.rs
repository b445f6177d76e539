//! Steering a group-mimic mock towards one group and scoring steerability.

use std::collections::BTreeMap;

use opinion_align::distribution::{DistributionSet, Provenance};
use opinion_align::human::{aggregate_all, GroupFilter, WeightingMode};
use opinion_align::metrics::{representativeness, steerability};
use opinion_align::probe::mock::{GroupMimicMock, OptionTable};
use opinion_align::probe::{
    bound_missing_options, build_prompt, extract_distribution, query_logprobs, ContextKind, InstructionVariant,
    ProbeCache, QuerySettings, SteeringContext, SteeringTemplates,
};
use opinion_align::survey::Question;
use opinion_align::synth::{synthetic_panel, synthetic_survey, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthSpec {
        questions: 8,
        respondents: 400,
        ..Default::default()
    };
    let survey = synthetic_survey(&spec);
    let panel = synthetic_panel(&survey, &spec);
    let qs: Vec<&Question> = survey.questions.iter().collect();
    let filter = GroupFilter::group("POLPARTY", "Democrat");
    let (democrats, _) = aggregate_all(&panel, &qs, &filter, WeightingMode::SurveyWeights);

    let party = survey.attribute("POLPARTY").expect("declared");
    let templates = SteeringTemplates::default();
    let contexts: Vec<SteeringContext> = ContextKind::STEERING
        .iter()
        .map(|&k| templates.render(k, party, "Democrat"))
        .collect::<Result<_, _>>()?;
    let mock = GroupMimicMock::new(
        "steerable",
        OptionTable::from_distributions(&survey.questions, &democrats),
    )
    .steered_by(contexts.iter().map(|c| c.rendered_text.clone()).collect());

    let cache = ProbeCache::in_memory();
    let settings = QuerySettings::default();
    let probe = |ctx: &SteeringContext| -> Result<DistributionSet, Box<dyn std::error::Error>> {
        let mut set = DistributionSet::new();
        for q in &qs {
            let identity: Vec<usize> = (0..q.n()).collect();
            let prompt = build_prompt(q, ctx, InstructionVariant::None, &identity)?;
            let result = query_logprobs(&mock, &prompt, &cache, &settings)?;
            let bounded = bound_missing_options(&result, &prompt.presentation.expected_labels())?;
            let provenance = Provenance::Model {
                model_id: "steerable".into(),
                context: ctx.tag(),
            };
            set.insert(
                q.qid.clone(),
                extract_distribution(&bounded.logprobs, q, &prompt.presentation, provenance)?,
            );
        }
        Ok(set)
    };

    let default = probe(&SteeringContext::none())?;
    let mut by_context = BTreeMap::new();
    for ctx in &contexts {
        by_context.insert(ctx.kind, probe(ctx)?);
    }
    let r = representativeness(&default, &democrats, &qs)?;
    let s = steerability(&by_context, &democrats, &qs)?;
    println!("default R(Democrat) = {:.6}", r.value);
    println!("steered S(Democrat) = {:.6}", s.value);
    println!("per-context means {:?}", s.per_context);
    println!("best-context counts {:?}", s.best_context);
    Ok(())
}
