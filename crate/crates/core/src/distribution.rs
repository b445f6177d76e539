use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::survey::Question;

/// Where a distribution came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    HumanOverall,
    HumanGroup { attribute: String, group: String },
    Model { model_id: String, context: String },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::HumanOverall => write!(f, "human-overall"),
            Provenance::HumanGroup { attribute, group } => {
                write!(f, "human-group({attribute}={group})")
            }
            Provenance::Model { model_id, context } => write!(f, "model({model_id},{context})"),
        }
    }
}

/// Probability vector over a question's non-refusal options (survey order),
/// with the refusal mass kept on a separate channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionDistribution {
    pub qid: String,
    pub probs: Vec<f64>,
    /// `None` when the question offers no refusal option.
    pub refusal_rate: Option<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistributionError {
    #[error("{qid}: expected {expected} probabilities, got {actual}")]
    Length {
        qid: String,
        expected: usize,
        actual: usize,
    },
    #[error("{qid}: probability {value} outside [0, 1]")]
    Range { qid: String, value: f64 },
    #[error("{qid}: probabilities sum to {sum}")]
    Sum { qid: String, sum: f64 },
}

pub const SUM_TOLERANCE: f64 = 1e-9;

impl OpinionDistribution {
    /// Checks the length, range and normalization invariants against `question`.
    pub fn check(&self, question: &Question) -> Result<(), DistributionError> {
        if self.probs.len() != question.n() {
            return Err(DistributionError::Length {
                qid: self.qid.clone(),
                expected: question.n(),
                actual: self.probs.len(),
            });
        }
        let in_range = |p: f64| (0.0..=1.0).contains(&p);
        if let Some(&bad) = self.probs.iter().find(|p| !in_range(**p)) {
            return Err(DistributionError::Range {
                qid: self.qid.clone(),
                value: bad,
            });
        }
        if let Some(r) = self.refusal_rate.filter(|r| !in_range(*r)) {
            return Err(DistributionError::Range {
                qid: self.qid.clone(),
                value: r,
            });
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(DistributionError::Sum {
                qid: self.qid.clone(),
                sum,
            });
        }
        Ok(())
    }
}

/// Distributions of one provenance keyed by question id.
pub type DistributionSet = BTreeMap<String, OpinionDistribution>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::test_support::ordinal_question;

    fn dist(probs: Vec<f64>) -> OpinionDistribution {
        OpinionDistribution {
            qid: "q".into(),
            probs,
            refusal_rate: None,
            provenance: Provenance::HumanOverall,
        }
    }

    #[test]
    fn invariants() {
        let q = ordinal_question("q", 3, false);
        assert!(dist(vec![0.2, 0.3, 0.5]).check(&q).is_ok());
        assert!(matches!(
            dist(vec![0.5, 0.5]).check(&q),
            Err(DistributionError::Length { .. })
        ));
        assert!(matches!(
            dist(vec![0.5, 0.6, -0.1]).check(&q),
            Err(DistributionError::Range { .. })
        ));
        assert!(matches!(
            dist(vec![0.5, 0.4, 0.0]).check(&q),
            Err(DistributionError::Sum { .. })
        ));
    }

    #[test]
    fn provenance_labels() {
        let g = Provenance::HumanGroup {
            attribute: "POLPARTY".into(),
            group: "Democrat".into(),
        };
        assert_eq!(g.to_string(), "human-group(POLPARTY=Democrat)");
        assert_eq!(Provenance::HumanOverall.to_string(), "human-overall");
    }
}
