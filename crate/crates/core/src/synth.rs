//! Synthetic surveys and respondent panels for offline runs and tests.
//!
//! Each demographic group gets a latent lean in [-1, 1]; a respondent's lean
//! averages the leans of their groups plus noise, and each question maps lean
//! onto its ordinal scale with its own polarity. Groups therefore disagree in
//! a structured way while every panel stays reproducible from its seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::survey::{
    DemographicAttribute, OptionKind, OptionSpec, Question, Respondent, ResponsePanel, Survey, SurveyError,
};

const TOPICS: [&str; 5] = ["guns", "economy", "science", "religion", "family"];

/// Attribute name, survey wording, short description and groups.
const ATTRIBUTES: [(&str, &str, &str, &[&str]); 12] = [
    (
        "CREGION",
        "Which part of the United States do you currently live in?",
        "region",
        &["Northeast", "Midwest", "South", "West"],
    ),
    (
        "SEX",
        "What is the sex that you were assigned at birth?",
        "sex",
        &["Male", "Female"],
    ),
    ("AGE", "How old are you?", "age", &["18-29", "30-49", "50-64", "65+"]),
    (
        "EDUCATION",
        "What is the highest level of schooling or degree that you have completed?",
        "education",
        &[
            "Less than high school",
            "High school graduate",
            "Some college, no degree",
            "Associate's degree",
            "College graduate/some postgrad",
            "Postgraduate",
        ],
    ),
    (
        "RACE",
        "What is your race or origin?",
        "race",
        &["White", "Black", "Asian", "Hispanic", "Other"],
    ),
    (
        "CITIZEN",
        "Are you a citizen of the United States?",
        "citizenship",
        &["Yes", "No"],
    ),
    (
        "MARITAL",
        "Which of these best describes you?",
        "marital status",
        &[
            "Married",
            "Living with a partner",
            "Divorced",
            "Separated",
            "Widowed",
            "Never been married",
        ],
    ),
    (
        "RELIG",
        "What is your present religion, if any?",
        "religion",
        &[
            "Protestant",
            "Roman Catholic",
            "Mormon",
            "Orthodox",
            "Jewish",
            "Muslim",
            "Buddhist",
            "Hindu",
            "Atheist",
            "Agnostic",
            "Other",
            "Nothing in particular",
        ],
    ),
    (
        "RELIGATTEND",
        "Aside from weddings and funerals, how often do you attend religious services?",
        "religious attendance",
        &[
            "More than once a week",
            "Once a week",
            "Once or twice a month",
            "A few times a year",
            "Seldom",
            "Never",
        ],
    ),
    (
        "POLPARTY",
        "In politics today, do you consider yourself a",
        "political party",
        &["Republican", "Democrat", "Independent", "Something else"],
    ),
    (
        "INCOME",
        "Last year, what was your total family income from all sources, before taxes?",
        "income",
        &[
            "Less than $30,000",
            "$30,000-$50,000",
            "$50,000-$75,000",
            "$75,000-$100,000",
            "$100,000 or more",
        ],
    ),
    (
        "POLIDEOLOGY",
        "In general, would you describe your political views as",
        "political ideology",
        &[
            "Very conservative",
            "Conservative",
            "Moderate",
            "Liberal",
            "Very liberal",
        ],
    ),
];

/// The standard demographic attributes with their survey wording.
pub fn standard_attributes() -> Vec<DemographicAttribute> {
    ATTRIBUTES
        .iter()
        .map(|(name, question, description, groups)| {
            let mut a = DemographicAttribute::new(*name, groups.iter().map(|g| g.to_string()).collect());
            a.question = Some(question.to_string());
            a.description = Some(description.to_string());
            a
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub questions: usize,
    pub respondents: usize,
    pub seed: u64,
    /// Chance that a respondent refuses a question offering refusal.
    pub refusal_rate: f64,
    /// Chance that an answer cell is left empty.
    pub missing_rate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            questions: 20,
            respondents: 800,
            seed: 7,
            refusal_rate: 0.03,
            missing_rate: 0.02,
        }
    }
}

/// A survey of `spec.questions` questions with 2 to 5 ordinal options; every
/// third question adds a hedge and most offer refusal.
pub fn synthetic_survey(spec: &SynthSpec) -> Survey {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut questions = Vec::with_capacity(spec.questions);
    for i in 0..spec.questions {
        let qid = format!("Q{:02}", i + 1);
        let ordinal = rng.gen_range(2..=5usize);
        let hedge = i % 3 == 2;
        let refusal = i % 5 != 4;
        let mut options: Vec<OptionSpec> = (0..ordinal)
            .map(|k| OptionSpec::new(label(k), format!("Level {} of {ordinal}", k + 1), OptionKind::Ordinal))
            .collect();
        if hedge {
            options.push(OptionSpec::new(label(ordinal), "Neither", OptionKind::Hedge));
        }
        if refusal {
            options.push(OptionSpec::new(label(options.len()), "Refused", OptionKind::Refusal));
        }
        let mut topics = vec![TOPICS[i % TOPICS.len()].to_string()];
        if i % 4 == 3 {
            topics.push(TOPICS[(i + 2) % TOPICS.len()].to_string());
        }
        let text = format!("How strongly do you support proposal {} on {}?", i + 1, topics[0]);
        questions.push(Question::new(qid, text, topics, options, "SYNTH").expect("generated question is valid"));
    }
    Survey {
        survey_id: "SYNTH".into(),
        questions,
        demographics: standard_attributes(),
        topics: Vec::new(),
    }
}

fn label(i: usize) -> String {
    crate::probe::default_label(i)
}

fn leans(survey: &Survey, rng: &mut ChaCha8Rng) -> BTreeMap<(String, String), f64> {
    let mut out = BTreeMap::new();
    for a in &survey.demographics {
        for g in &a.groups {
            out.insert((a.name.clone(), g.clone()), rng.gen_range(-1.0..=1.0));
        }
    }
    out
}

/// Respondents with weights in [0.5, 2], one group per attribute, and
/// answers driven by their groups' leans.
pub fn synthetic_panel(survey: &Survey, spec: &SynthSpec) -> ResponsePanel {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let leans = leans(survey, &mut rng);
    let polarity: Vec<f64> = survey
        .questions
        .iter()
        .map(|_| (if rng.gen_bool(0.5) { 1.0 } else { -1.0 }) * rng.gen_range(0.6..1.4))
        .collect();

    let mut respondents = Vec::with_capacity(spec.respondents);
    for r in 0..spec.respondents {
        let weight = (rng.gen_range(0.5..2.0f64) * 1000.0).round() / 1000.0;
        let mut respondent = Respondent::new(format!("R{:04}", r + 1), weight);
        let mut lean = 0.0;
        for a in &survey.demographics {
            let g = &a.groups[rng.gen_range(0..a.groups.len())];
            lean += leans[&(a.name.clone(), g.clone())];
            respondent = respondent.with_group(&a.name, g);
        }
        lean = lean / survey.demographics.len().max(1) as f64 * 2.5 + rng.gen_range(-0.3..0.3);

        for (q, pol) in survey.questions.iter().zip(&polarity) {
            if rng.gen_bool(spec.missing_rate) {
                continue;
            }
            if let Some(refusal) = q.refusal_option() {
                if rng.gen_bool(spec.refusal_rate) {
                    respondent = respondent.with_answer(&q.qid, &refusal.label);
                    continue;
                }
            }
            let choice = choose(q, lean * pol, &mut rng);
            respondent = respondent.with_answer(&q.qid, &q.options[choice].label);
        }
        respondents.push(respondent);
    }
    ResponsePanel::new(respondents, &survey.questions).expect("generated panel is valid")
}

/// Picks a non-refusal option: ordinal positions weighted by closeness to
/// the respondent's target, with some mass on the hedge when offered.
fn choose(q: &Question, signal: f64, rng: &mut ChaCha8Rng) -> usize {
    let k = q.ordinal_count();
    let target = ((signal.clamp(-1.0, 1.0) + 1.0) / 2.0) * (k - 1) as f64;
    let mut weights: Vec<f64> = (0..k).map(|i| (-(i as f64 - target).powi(2)).exp()).collect();
    if q.has_hedge() {
        let total: f64 = weights.iter().sum();
        weights.push(total * 0.15);
    }
    WeightedIndex::new(&weights).expect("positive weights").sample(rng)
}

/// Serializes a panel in the microdata layout `load_responses` reads.
pub fn panel_to_csv(panel: &ResponsePanel, survey: &Survey) -> Result<String, SurveyError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["respondent_id".to_string(), "weight".to_string()];
    header.extend(survey.demographics.iter().map(|a| a.name.clone()));
    header.extend(survey.questions.iter().map(|q| q.qid.clone()));
    w.write_record(&header)?;
    for r in &panel.respondents {
        let mut row = vec![r.id.clone(), r.weight.to_string()];
        row.extend(
            survey
                .demographics
                .iter()
                .map(|a| r.group(&a.name).unwrap_or_default().to_string()),
        );
        row.extend(survey.questions.iter().map(|q| match r.answer(&q.qid) {
            crate::survey::Answer::Chosen(l) => l,
            crate::survey::Answer::Missing => String::new(),
        }));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| SurveyError::Microdata(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `survey.json` and `microdata.csv` into `dir`.
pub fn write_fixture(dir: &Path, spec: &SynthSpec) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let survey = synthetic_survey(spec);
    let panel = synthetic_panel(&survey, spec);
    let schema = dir.join("survey.json");
    let microdata = dir.join("microdata.csv");
    std::fs::write(&schema, survey.to_document() + "\n")?;
    std::fs::write(
        &microdata,
        panel_to_csv(&panel, &survey).map_err(std::io::Error::other)?,
    )?;
    Ok((schema, microdata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::{load_responses, load_survey};

    #[test]
    fn deterministic_and_round_trips() {
        let spec = SynthSpec {
            questions: 6,
            respondents: 50,
            ..Default::default()
        };
        let survey = synthetic_survey(&spec);
        let panel = synthetic_panel(&survey, &spec);
        assert_eq!(panel, synthetic_panel(&survey, &spec));
        let csv = panel_to_csv(&panel, &survey).unwrap();
        let reread = load_responses(csv.as_bytes(), &survey.questions).unwrap();
        assert_eq!(reread, panel);
        let doc = load_survey(&survey.to_document()).unwrap();
        assert_eq!(doc.questions.len(), 6);
        assert!(survey.questions.iter().any(Question::has_hedge));
        assert!(survey.questions.iter().any(|q| !q.has_refusal()));
    }
}
