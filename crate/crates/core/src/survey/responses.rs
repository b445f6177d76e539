use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use super::{Question, SurveyError};

/// A respondent's answer to one question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    /// The question was not asked or left blank; excluded from aggregation.
    Missing,
    Chosen(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Respondent {
    pub id: String,
    pub weight: f64,
    /// attribute -> group; absent when the cell was empty.
    pub demographics: BTreeMap<String, String>,
    answers: HashMap<String, String>,
}

impl Respondent {
    pub fn new(id: impl Into<String>, weight: f64) -> Self {
        Self {
            id: id.into(),
            weight,
            demographics: BTreeMap::new(),
            answers: HashMap::new(),
        }
    }

    pub fn with_group(mut self, attribute: &str, group: &str) -> Self {
        self.demographics.insert(attribute.into(), group.into());
        self
    }

    pub fn with_answer(mut self, qid: &str, label: &str) -> Self {
        self.answers.insert(qid.into(), label.into());
        self
    }

    pub fn answer(&self, qid: &str) -> Answer {
        match self.answers.get(qid) {
            Some(label) => Answer::Chosen(label.clone()),
            None => Answer::Missing,
        }
    }

    pub(crate) fn answer_label(&self, qid: &str) -> Option<&str> {
        self.answers.get(qid).map(String::as_str)
    }

    pub fn group(&self, attribute: &str) -> Option<&str> {
        self.demographics.get(attribute).map(String::as_str)
    }
}

/// Respondents of one survey with their weights, demographics and answers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResponsePanel {
    pub respondents: Vec<Respondent>,
}

impl ResponsePanel {
    /// Builds a panel, checking weights and that every answer label resolves.
    pub fn new(respondents: Vec<Respondent>, questions: &[Question]) -> Result<Self, SurveyError> {
        let by_qid: HashMap<&str, &Question> = questions.iter().map(|q| (q.qid.as_str(), q)).collect();
        for r in &respondents {
            if !r.weight.is_finite() {
                return Err(SurveyError::BadWeight {
                    respondent_id: r.id.clone(),
                    value: r.weight.to_string(),
                });
            }
            if r.weight < 0.0 {
                return Err(SurveyError::NegativeWeight {
                    respondent_id: r.id.clone(),
                });
            }
            for (qid, label) in &r.answers {
                let q = by_qid
                    .get(qid.as_str())
                    .ok_or_else(|| SurveyError::Microdata(format!("answer for unknown question {qid}")))?;
                if q.option_index(label).is_none() {
                    return Err(SurveyError::UnknownLabel {
                        qid: qid.clone(),
                        label: label.clone(),
                    });
                }
            }
        }
        Ok(Self { respondents })
    }

    pub fn len(&self) -> usize {
        self.respondents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.respondents.is_empty()
    }
}

/// Reads a delimited microdata table.
///
/// Header: `respondent_id, weight`, then any mix of demographic columns and
/// one column per qid. Columns whose name matches a question id are answers;
/// every other column is a demographic attribute.
pub fn load_responses<R: Read>(table: R, questions: &[Question]) -> Result<ResponsePanel, SurveyError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(table);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SurveyError::Microdata(format!("missing column {name:?}")))
    };
    let id_col = column("respondent_id")?;
    let weight_col = column("weight")?;
    let qids: HashMap<&str, &Question> = questions.iter().map(|q| (q.qid.as_str(), q)).collect();

    let mut respondents = Vec::new();
    for record in reader.records() {
        let record = record?;
        let id = record.get(id_col).unwrap_or_default().to_string();
        let raw_weight = record.get(weight_col).unwrap_or_default();
        let weight: f64 = raw_weight.parse().map_err(|_| SurveyError::BadWeight {
            respondent_id: id.clone(),
            value: raw_weight.to_string(),
        })?;
        let mut respondent = Respondent::new(id, weight);
        for (idx, cell) in record.iter().enumerate() {
            if idx == id_col || idx == weight_col || cell.is_empty() {
                continue;
            }
            let name = &headers[idx];
            if let Some(q) = qids.get(name) {
                if q.option_index(cell).is_none() {
                    return Err(SurveyError::UnknownLabel {
                        qid: q.qid.clone(),
                        label: cell.to_string(),
                    });
                }
                respondent.answers.insert(name.to_string(), cell.to_string());
            } else {
                respondent.demographics.insert(name.to_string(), cell.to_string());
            }
        }
        respondents.push(respondent);
    }
    ResponsePanel::new(respondents, questions)
}
