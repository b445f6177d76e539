//! Default, steered, permuted and instruction-variant prompts.

use opinion_align::probe::{
    build_prompt, build_prompt_with, permutation_seed, ContextKind, InstructionVariant, Presentation, SteeringContext,
    SteeringTemplates,
};
use opinion_align::survey::{OptionKind, OptionSpec, Question};
use opinion_align::synth::standard_attributes;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = Question::new(
        "GUNS",
        "How much, if at all, do you think the ease with which people can legally obtain guns contributes to gun violence in the country today?",
        vec!["guns".into()],
        vec![
            OptionSpec::new("A", "A great deal", OptionKind::Ordinal),
            OptionSpec::new("B", "A fair amount", OptionKind::Ordinal),
            OptionSpec::new("C", "Not too much", OptionKind::Ordinal),
            OptionSpec::new("D", "Not at all", OptionKind::Ordinal),
            OptionSpec::new("E", "Refused", OptionKind::Refusal),
        ],
        "example",
    )?;
    let none = SteeringContext::none();
    println!(
        "--- default ---\n{}\n",
        build_prompt(&q, &none, InstructionVariant::None, &[0, 1, 2, 3])?.text
    );

    let party = standard_attributes()
        .into_iter()
        .find(|a| a.name == "POLPARTY")
        .expect("declared");
    let templates = SteeringTemplates::default();
    for kind in ContextKind::STEERING {
        let ctx = templates.render(kind, &party, "Democrat")?;
        let prompt = build_prompt(&q, &ctx, InstructionVariant::None, &[0, 1, 2, 3])?;
        println!("--- {} ---\n{}\n", ctx.tag(), prompt.text);
    }

    let presentation = Presentation::seeded(&q, permutation_seed(42, &q.qid));
    let prompt = build_prompt_with(&q, &none, InstructionVariant::General, presentation);
    println!(
        "--- permuted {:?} with general instruction ---\n{}\n",
        prompt.presentation.permutation(),
        prompt.text
    );
    println!("prompt hash {}", prompt.hash());
    Ok(())
}
