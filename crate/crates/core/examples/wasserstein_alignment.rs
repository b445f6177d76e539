//! Ordinal supports, 1-D Wasserstein distance and per-question alignment.

use opinion_align::metrics::{question_alignment, wasserstein_1d, OrdinalSupport};
use opinion_align::survey::{OptionKind, OptionSpec, Question};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let guns = Question::new(
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
    let support = OrdinalSupport::for_question(&guns);
    println!("support {:?}, N = {}", support.values, guns.n());

    let humans = [0.5, 0.5, 0.0, 0.0];
    let model = [0.0, 0.0, 0.5, 0.5];
    let wd = wasserstein_1d(&humans, &model, &support.values)?;
    println!(
        "WD = {wd:.6}, alignment = {:.6}",
        question_alignment(&guns, &humans, &model)?
    );

    let mood = Question::new(
        "MOOD",
        "How would you rate the economy?",
        vec!["economy".into()],
        vec![
            OptionSpec::new("A", "Very good", OptionKind::Ordinal),
            OptionSpec::new("B", "Very bad", OptionKind::Ordinal),
            OptionSpec::new("C", "Neither", OptionKind::Hedge),
        ],
        "example",
    )?;
    let support = OrdinalSupport::for_question(&mood);
    println!(
        "hedge support {:?}: largest reachable distance {} against normalizer {}",
        support.values,
        support.achievable_max(),
        mood.n() - 1
    );
    println!(
        "point mass on 'Very good' vs 'Very bad': alignment {:.6}",
        question_alignment(&mood, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0])?
    );
    Ok(())
}
