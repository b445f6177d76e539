//! Canonical survey schema: questions with ordered options, topic tags and
//! demographic attributes, plus respondent microdata.

mod responses;
mod topics;

pub use responses::{load_responses, Answer, Respondent, ResponsePanel};
pub use topics::{questions_for_topic, Taxonomy};

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error("malformed survey document: {0}")]
    Schema(String),
    #[error("question {qid}: {reason}")]
    Invariant { qid: String, reason: String },
    #[error("duplicate question id {0}")]
    DuplicateQid(String),
    #[error("demographic attribute {attribute}: {reason}")]
    Demographic { attribute: String, reason: String },
    #[error("question {qid} has no option labelled {label:?}")]
    UnknownLabel { qid: String, label: String },
    #[error("respondent {respondent_id} has a negative weight")]
    NegativeWeight { respondent_id: String },
    #[error("respondent {respondent_id}: weight {value:?} is not a finite number")]
    BadWeight { respondent_id: String, value: String },
    #[error("microdata: {0}")]
    Microdata(String),
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Ordinal,
    Hedge,
    Refusal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub label: String,
    pub text: String,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn new(label: impl Into<String>, text: impl Into<String>, kind: OptionKind) -> Self {
        Self {
            label: label.into(),
            text: text.into(),
            kind,
        }
    }
}

/// A multiple-choice survey item.
///
/// Options are stored in presentation order. Non-refusal options always
/// precede the refusal option, so `options[..n()]` are the options that take
/// part in distance computations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub qid: String,
    pub text: String,
    pub topics: Vec<String>,
    pub options: Vec<OptionSpec>,
    #[serde(skip)]
    pub survey_id: String,
}

impl Question {
    /// Validates every option invariant and returns the question.
    pub fn new(
        qid: impl Into<String>,
        text: impl Into<String>,
        topics: Vec<String>,
        options: Vec<OptionSpec>,
        survey_id: impl Into<String>,
    ) -> Result<Self, SurveyError> {
        let q = Self {
            qid: qid.into(),
            text: text.into(),
            topics,
            options,
            survey_id: survey_id.into(),
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), SurveyError> {
        let fail = |reason: String| SurveyError::Invariant {
            qid: self.qid.clone(),
            reason,
        };
        if self.qid.is_empty() {
            return Err(SurveyError::Schema("question with empty qid".into()));
        }
        if self.topics.is_empty() {
            return Err(fail("question has no topics".into()));
        }
        let mut seen = HashSet::new();
        for opt in &self.options {
            if opt.label.is_empty() {
                return Err(fail("empty option label".into()));
            }
            if !seen.insert(opt.label.as_str()) {
                return Err(fail(format!("duplicate option label {:?}", opt.label)));
            }
        }
        let count = |kind| self.options.iter().filter(|o| o.kind == kind).count();
        if count(OptionKind::Refusal) > 1 {
            return Err(fail("more than one refusal option".into()));
        }
        if count(OptionKind::Hedge) > 1 {
            return Err(fail("more than one hedge option".into()));
        }
        if let Some(pos) = self.options.iter().position(|o| o.kind == OptionKind::Refusal) {
            if pos + 1 != self.options.len() {
                return Err(fail("refusal option must be last".into()));
            }
        }
        let n = self.n();
        if let Some(pos) = self.options.iter().position(|o| o.kind == OptionKind::Hedge) {
            if pos + 1 != n {
                return Err(fail("hedge option must be the last non-refusal option".into()));
            }
        }
        if count(OptionKind::Ordinal) < 2 {
            return Err(fail("fewer than two ordinal options".into()));
        }
        Ok(())
    }

    /// Number of non-refusal options (the alignment normalizer is `n() - 1`).
    pub fn n(&self) -> usize {
        self.options.iter().filter(|o| o.kind != OptionKind::Refusal).count()
    }

    pub fn ordinal_count(&self) -> usize {
        self.options.iter().filter(|o| o.kind == OptionKind::Ordinal).count()
    }

    pub fn non_refusal_options(&self) -> &[OptionSpec] {
        &self.options[..self.n()]
    }

    pub fn refusal_option(&self) -> Option<&OptionSpec> {
        self.options.last().filter(|o| o.kind == OptionKind::Refusal)
    }

    pub fn has_refusal(&self) -> bool {
        self.refusal_option().is_some()
    }

    pub fn has_hedge(&self) -> bool {
        self.options.iter().any(|o| o.kind == OptionKind::Hedge)
    }

    pub fn option_index(&self, label: &str) -> Option<usize> {
        self.options.iter().position(|o| o.label == label)
    }

    pub fn has_topic(&self, topic: &str) -> bool {
        self.topics.iter().any(|t| t == topic)
    }
}

/// A demographic trait and its groups, e.g. political party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicAttribute {
    pub name: String,
    pub groups: Vec<String>,
    /// Survey wording used to collect the attribute; rendered in QA steering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    /// Noun phrase for the attribute ("political party"), used in BIO steering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Per-group phrasing ("a Democrat"); falls back to the group id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub phrasing: BTreeMap<String, String>,
}

impl DemographicAttribute {
    pub fn new(name: impl Into<String>, groups: Vec<String>) -> Self {
        Self {
            name: name.into(),
            groups,
            question: None,
            description: None,
            phrasing: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SurveyError> {
        let fail = |reason: &str| SurveyError::Demographic {
            attribute: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.is_empty() {
            return Err(fail("empty attribute name"));
        }
        let mut seen = HashSet::new();
        for g in &self.groups {
            if !seen.insert(g.as_str()) {
                return Err(fail(&format!("duplicate group {g:?}")));
            }
        }
        if let Some(extra) = self.phrasing.keys().find(|k| !seen.contains(k.as_str())) {
            return Err(fail(&format!("phrasing for undeclared group {extra:?}")));
        }
        Ok(())
    }

    pub fn has_group(&self, group: &str) -> bool {
        self.groups.iter().any(|g| g == group)
    }

    pub fn group_phrase<'a>(&'a self, group: &'a str) -> &'a str {
        self.phrasing.get(group).map(String::as_str).unwrap_or(group)
    }

    pub fn describe(&self) -> String {
        self.description.clone().unwrap_or_else(|| self.name.to_lowercase())
    }
}

/// One curated survey: its questions, demographic traits and optional
/// declared topic taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Survey {
    pub survey_id: String,
    pub questions: Vec<Question>,
    #[serde(default)]
    pub demographics: Vec<DemographicAttribute>,
    /// Topics that exist even when no question is tagged with them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub topics: Vec<String>,
}

impl Survey {
    pub fn validate(&self) -> Result<(), SurveyError> {
        if self.survey_id.is_empty() {
            return Err(SurveyError::Schema("empty survey_id".into()));
        }
        let mut qids = HashSet::new();
        for q in &self.questions {
            q.validate()?;
            if !qids.insert(q.qid.as_str()) {
                return Err(SurveyError::DuplicateQid(q.qid.clone()));
            }
        }
        let mut names = HashSet::new();
        for attr in &self.demographics {
            attr.validate()?;
            if !names.insert(attr.name.as_str()) {
                return Err(SurveyError::Demographic {
                    attribute: attr.name.clone(),
                    reason: "declared twice".into(),
                });
            }
        }
        Ok(())
    }

    pub fn question(&self, qid: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.qid == qid)
    }

    pub fn attribute(&self, name: &str) -> Option<&DemographicAttribute> {
        self.demographics.iter().find(|a| a.name == name)
    }

    pub fn taxonomy(&self) -> Taxonomy {
        Taxonomy::from_questions(&self.questions).with_topics(self.topics.iter().cloned())
    }

    /// Serializes back to the canonical JSON document.
    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("survey serializes")
    }
}

/// Parses and validates a canonical survey document.
pub fn load_survey(document: &str) -> Result<Survey, SurveyError> {
    let mut survey: Survey = serde_json::from_str(document).map_err(|e| SurveyError::Schema(e.to_string()))?;
    for q in &mut survey.questions {
        q.survey_id = survey.survey_id.clone();
    }
    survey.validate()?;
    Ok(survey)
}
