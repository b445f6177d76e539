//! Weighted human opinion distributions and human-vs-human baselines.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::{DistributionSet, OpinionDistribution, Provenance};
use crate::metrics::{alignment, DistPair, MetricError};
use crate::survey::{OptionKind, Question, Respondent, ResponsePanel};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupFilter {
    All,
    Group { attribute: String, group: String },
}

impl GroupFilter {
    pub fn group(attribute: impl Into<String>, group: impl Into<String>) -> Self {
        GroupFilter::Group {
            attribute: attribute.into(),
            group: group.into(),
        }
    }

    pub fn matches(&self, respondent: &Respondent) -> bool {
        match self {
            GroupFilter::All => true,
            GroupFilter::Group { attribute, group } => respondent.group(attribute) == Some(group),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            GroupFilter::All => Provenance::HumanOverall,
            GroupFilter::Group { attribute, group } => Provenance::HumanGroup {
                attribute: attribute.clone(),
                group: group.clone(),
            },
        }
    }
}

impl fmt::Display for GroupFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupFilter::All => write!(f, "all respondents"),
            GroupFilter::Group { attribute, group } => write!(f, "{attribute}={group}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    #[default]
    SurveyWeights,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HumanError {
    #[error("no respondent in {filter} answered {qid}")]
    EmptyCell { qid: String, filter: String },
    #[error("every respondent in {filter} refused {qid}")]
    AllRefused { qid: String, filter: String },
    #[error("no question offers a refusal option")]
    NoRefusalOption,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Weighted share of each option among respondents in `filter` who answered.
///
/// Respondents with a missing answer drop out entirely. Those who refused
/// count towards `refusal_rate` only; `probs` is renormalized over the
/// substantive answers.
pub fn aggregate_distribution(
    panel: &ResponsePanel,
    question: &Question,
    filter: &GroupFilter,
    mode: WeightingMode,
) -> Result<OpinionDistribution, HumanError> {
    let n = question.n();
    let mut mass = vec![0.0; n];
    let mut refused = 0.0;
    let mut answered = 0usize;
    for r in panel.respondents.iter().filter(|r| filter.matches(r)) {
        let Some(idx) = r.answer_label(&question.qid).and_then(|l| question.option_index(l)) else {
            continue;
        };
        answered += 1;
        let w = match mode {
            WeightingMode::SurveyWeights => r.weight,
            WeightingMode::Uniform => 1.0,
        };
        if question.options[idx].kind == OptionKind::Refusal {
            refused += w;
        } else {
            mass[idx] += w;
        }
    }
    let substantive: f64 = mass.iter().sum();
    let total = substantive + refused;
    if answered == 0 || total <= 0.0 {
        return Err(HumanError::EmptyCell {
            qid: question.qid.clone(),
            filter: filter.to_string(),
        });
    }
    if substantive <= 0.0 {
        return Err(HumanError::AllRefused {
            qid: question.qid.clone(),
            filter: filter.to_string(),
        });
    }
    Ok(OpinionDistribution {
        qid: question.qid.clone(),
        probs: mass.into_iter().map(|m| m / substantive).collect(),
        refusal_rate: question.has_refusal().then(|| refused / total),
        provenance: filter.provenance(),
    })
}

/// Distributions for every question a filter can score, plus the failures.
pub fn aggregate_all(
    panel: &ResponsePanel,
    questions: &[&Question],
    filter: &GroupFilter,
    mode: WeightingMode,
) -> (DistributionSet, Vec<HumanError>) {
    let mut set = DistributionSet::new();
    let mut failures = Vec::new();
    for q in questions {
        match aggregate_distribution(panel, q, filter, mode) {
            Ok(d) => {
                set.insert(q.qid.clone(), d);
            }
            Err(e) => failures.push(e),
        }
    }
    (set, failures)
}

/// Unweighted mean over questions of the human refusal rate.
///
/// Only questions with a refusal option and at least one answer in the
/// filter take part; a question everyone refused counts as 1.
pub fn human_refusal_rate(
    panel: &ResponsePanel,
    questions: &[&Question],
    filter: &GroupFilter,
    mode: WeightingMode,
) -> Result<f64, HumanError> {
    let mut total = 0.0;
    let mut count = 0usize;
    for q in questions.iter().filter(|q| q.has_refusal()) {
        let rate = match aggregate_distribution(panel, q, filter, mode) {
            Ok(d) => d.refusal_rate.unwrap_or(0.0),
            Err(HumanError::AllRefused { .. }) => 1.0,
            Err(_) => continue,
        };
        total += rate;
        count += 1;
    }
    if count == 0 {
        return Err(HumanError::NoRefusalOption);
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baseline {
    pub value: f64,
    pub questions: usize,
    /// Questions where either side had no usable answers.
    pub skipped: usize,
}

/// Alignment between two respondent groups over a question set.
///
/// Questions one of the groups never answered are skipped and counted.
pub fn group_alignment_baseline(
    panel: &ResponsePanel,
    questions: &[&Question],
    first: &GroupFilter,
    second: &GroupFilter,
    mode: WeightingMode,
) -> Result<Baseline, HumanError> {
    let mut rows = Vec::new();
    for q in questions {
        let a = aggregate_distribution(panel, q, first, mode);
        let b = aggregate_distribution(panel, q, second, mode);
        if let (Ok(a), Ok(b)) = (a, b) {
            rows.push((*q, a.probs, b.probs));
        }
    }
    if rows.is_empty() {
        return Err(HumanError::EmptyCell {
            qid: questions.iter().map(|q| q.qid.as_str()).collect::<Vec<_>>().join(","),
            filter: format!("{first} / {second}"),
        });
    }
    let skipped = questions.len() - rows.len();
    if skipped > 0 {
        log::warn!("baseline {first} vs {second}: skipped {skipped} questions");
    }
    let value = alignment(rows.iter().map(|(q, a, b)| DistPair {
        question: q,
        left: a,
        right: b,
    }))?;
    Ok(Baseline {
        value,
        questions: rows.len(),
        skipped,
    })
}
