use crate::survey::{OptionKind, Question};

/// Positions of a question's non-refusal options on the real line.
///
/// Ordinal options take 1..=K in survey order. A trailing hedge option sits
/// at the mean of the ordinal keys, so {Very good, Very bad, Neither} maps to
/// {1, 2, 1.5}.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalSupport {
    pub qid: String,
    pub values: Vec<f64>,
}

impl OrdinalSupport {
    pub fn for_question(question: &Question) -> Self {
        let k = question.ordinal_count();
        let hedge = (k as f64 + 1.0) / 2.0;
        let mut next = 0.0;
        let values = question
            .non_refusal_options()
            .iter()
            .map(|o| match o.kind {
                OptionKind::Hedge => hedge,
                _ => {
                    next += 1.0;
                    next
                }
            })
            .collect();
        Self {
            qid: question.qid.clone(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest distance any two distributions on this support can reach.
    pub fn achievable_max(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::test_support::ordinal_question;
    use crate::survey::OptionSpec;

    #[test]
    fn ordinal_keys() {
        let q = ordinal_question("q", 4, true);
        let s = OrdinalSupport::for_question(&q);
        assert_eq!(s.values, [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.achievable_max(), 3.0);
    }

    #[test]
    fn hedge_at_mean_of_ordinals() {
        let q = Question::new(
            "q",
            "t",
            vec!["x".into()],
            vec![
                OptionSpec::new("A", "Very good", OptionKind::Ordinal),
                OptionSpec::new("B", "Very bad", OptionKind::Ordinal),
                OptionSpec::new("C", "Neither good nor bad", OptionKind::Hedge),
                OptionSpec::new("D", "Refused", OptionKind::Refusal),
            ],
            "s",
        )
        .unwrap();
        let s = OrdinalSupport::for_question(&q);
        assert_eq!(s.values, [1.0, 2.0, 1.5]);
        assert_eq!(s.len(), q.n());
    }
}
