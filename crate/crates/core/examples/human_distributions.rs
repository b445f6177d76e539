//! Weighted human opinion distributions, refusal rates and group baselines.

use opinion_align::human::{
    aggregate_distribution, group_alignment_baseline, human_refusal_rate, GroupFilter, WeightingMode,
};
use opinion_align::survey::{load_responses, OptionKind, OptionSpec, Question};

const MICRODATA: &str = "\
respondent_id,weight,POLPARTY,Q1
r1,0.5,Democrat,A
r2,0.3,Democrat,A
r3,0.2,Republican,B
r4,1.0,Republican,C
r5,0.7,Republican,
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = Question::new(
        "Q1",
        "Should the city build more bike lanes?",
        vec!["transport".into()],
        vec![
            OptionSpec::new("A", "Yes", OptionKind::Ordinal),
            OptionSpec::new("B", "No", OptionKind::Ordinal),
            OptionSpec::new("C", "Refused", OptionKind::Refusal),
        ],
        "example",
    )?;
    let questions = vec![q];
    let panel = load_responses(MICRODATA.as_bytes(), &questions)?;
    let q = &questions[0];

    for filter in [
        GroupFilter::All,
        GroupFilter::group("POLPARTY", "Democrat"),
        GroupFilter::group("POLPARTY", "Republican"),
    ] {
        for mode in [WeightingMode::SurveyWeights, WeightingMode::Uniform] {
            match aggregate_distribution(&panel, q, &filter, mode) {
                Ok(d) => println!("{filter} ({mode:?}): probs {:?}, refusal {:?}", d.probs, d.refusal_rate),
                Err(e) => println!("{filter} ({mode:?}): {e}"),
            }
        }
    }
    let qs: Vec<&Question> = questions.iter().collect();
    println!(
        "overall refusal rate: {:.4}",
        human_refusal_rate(&panel, &qs, &GroupFilter::All, WeightingMode::SurveyWeights)?
    );
    let baseline = group_alignment_baseline(
        &panel,
        &qs,
        &GroupFilter::group("POLPARTY", "Democrat"),
        &GroupFilter::All,
        WeightingMode::SurveyWeights,
    )?;
    println!(
        "Democrats vs everyone: alignment {:.4} on {} question(s)",
        baseline.value, baseline.questions
    );
    Ok(())
}
