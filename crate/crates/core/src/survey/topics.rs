use std::collections::BTreeSet;

use super::{Question, SurveyError};

/// The set of known topic identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Taxonomy {
    topics: BTreeSet<String>,
}

impl Taxonomy {
    pub fn new<I, S>(topics: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            topics: topics.into_iter().map(Into::into).collect(),
        }
    }

    pub fn from_questions(questions: &[Question]) -> Self {
        Self::new(questions.iter().flat_map(|q| q.topics.iter().cloned()))
    }

    pub fn with_topics<I: IntoIterator<Item = String>>(mut self, extra: I) -> Self {
        self.topics.extend(extra);
        self
    }

    pub fn contains(&self, topic: &str) -> bool {
        self.topics.contains(topic)
    }

    /// Topics in lexical order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.topics.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }
}

/// Questions tagged with `topic`, in input order. A question tagged with
/// several topics shows up under each of them.
pub fn questions_for_topic<'a>(
    questions: &'a [Question],
    taxonomy: &Taxonomy,
    topic: &str,
) -> Result<Vec<&'a Question>, SurveyError> {
    if !taxonomy.contains(topic) {
        return Err(SurveyError::UnknownTopic(topic.to_string()));
    }
    Ok(questions.iter().filter(|q| q.has_topic(topic)).collect())
}
