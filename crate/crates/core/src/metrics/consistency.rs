use super::MetricError;

/// Per-topic representativeness scores, one row per group.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub groups: Vec<String>,
    pub topics: Vec<String>,
    scores: Vec<Vec<Option<f64>>>,
}

impl ScoreMatrix {
    pub fn new(groups: Vec<String>, topics: Vec<String>) -> Self {
        let scores = vec![vec![None; topics.len()]; groups.len()];
        Self { groups, topics, scores }
    }

    /// Builds a complete matrix from `rows[group][topic]`.
    pub fn from_rows(groups: Vec<String>, topics: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        let scores = rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect();
        Self { groups, topics, scores }
    }

    pub fn set(&mut self, group: usize, topic: usize, value: f64) {
        self.scores[group][topic] = Some(value);
    }

    pub fn get(&self, group: usize, topic: usize) -> Option<f64> {
        self.scores.get(group)?.get(topic).copied().flatten()
    }

    /// Column of scores for one topic, in group order.
    fn column(&self, topic: usize) -> Vec<f64> {
        (0..self.groups.len())
            .map(|g| self.get(g, topic).expect("checked complete"))
            .collect()
    }

    fn check_complete(&self) -> Result<(), MetricError> {
        if self.groups.is_empty() || self.topics.is_empty() {
            return Err(MetricError::IncompleteMatrix("no groups or no topics".into()));
        }
        if self.scores.len() != self.groups.len() || self.scores.iter().any(|r| r.len() != self.topics.len()) {
            return Err(MetricError::IncompleteMatrix("ragged rows".into()));
        }
        for (g, row) in self.scores.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                if v.is_none() {
                    return Err(MetricError::IncompleteMatrix(format!(
                        "group {} has no score on topic {}",
                        self.groups[g], self.topics[t]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// First index of the maximum; earlier entries win ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicBest {
    pub topic: String,
    pub group: String,
    /// Best over worst score; `None` when some score is not positive.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consistency {
    /// Fraction of topics whose best group is the overall best group.
    pub score: f64,
    /// Group with the highest topic-averaged score.
    pub best_group: String,
    pub per_topic: Vec<TopicBest>,
}

/// Consistency of a model's best-aligned group across topics, topics weighted
/// equally.
pub fn consistency(matrix: &ScoreMatrix) -> Result<Consistency, MetricError> {
    matrix.check_complete()?;
    let n_topics = matrix.topics.len();
    let means: Vec<f64> = (0..matrix.groups.len())
        .map(|g| (0..n_topics).map(|t| matrix.get(g, t).unwrap()).sum::<f64>() / n_topics as f64)
        .collect();
    let best = argmax(&means);

    let mut hits = 0usize;
    let mut per_topic = Vec::with_capacity(n_topics);
    for t in 0..n_topics {
        let column = matrix.column(t);
        let winner = argmax(&column);
        if winner == best {
            hits += 1;
        }
        per_topic.push(TopicBest {
            topic: matrix.topics[t].clone(),
            group: matrix.groups[winner].clone(),
            alpha: significance(&column).ok(),
        });
    }
    Ok(Consistency {
        score: hits as f64 / n_topics as f64,
        best_group: matrix.groups[best].clone(),
        per_topic,
    })
}

/// Ratio of the best to the worst group score within one topic.
pub fn significance(scores: &[f64]) -> Result<f64, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::EmptySet);
    }
    if let Some(&bad) = scores.iter().find(|&&s| !(s > 0.0)) {
        return Err(MetricError::DegenerateScore(bad));
    }
    let max = scores.iter().cloned().fold(f64::MIN, f64::max);
    let min = scores.iter().cloned().fold(f64::MAX, f64::min);
    Ok(max / min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn single_topic_is_fully_consistent() {
        let m = ScoreMatrix::from_rows(names("g", 3), names("t", 1), vec![vec![0.7], vec![0.9], vec![0.8]]);
        let c = consistency(&m).unwrap();
        assert_eq!(c.score, 1.0);
        assert_eq!(c.best_group, "g1");
    }

    #[test]
    fn two_of_three_topics() {
        // Per-topic winners [X, X, Y]; X has the higher mean.
        let m = ScoreMatrix::from_rows(
            vec!["X".into(), "Y".into()],
            names("t", 3),
            vec![vec![0.9, 0.8, 0.5], vec![0.7, 0.6, 0.6]],
        );
        let c = consistency(&m).unwrap();
        assert_eq!(c.score, 2.0 / 3.0);
        assert_eq!(c.best_group, "X");
        let winners: Vec<_> = c.per_topic.iter().map(|t| t.group.as_str()).collect();
        assert_eq!(winners, ["X", "X", "Y"]);
        assert!((c.per_topic[2].alpha.unwrap() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn dominant_group() {
        let m = ScoreMatrix::from_rows(
            names("g", 2),
            names("t", 4),
            vec![vec![0.9, 0.9, 0.8, 0.7], vec![0.5, 0.6, 0.7, 0.6]],
        );
        assert_eq!(consistency(&m).unwrap().score, 1.0);
    }

    #[test]
    fn ties_go_to_first_declared() {
        let m = ScoreMatrix::from_rows(names("g", 2), names("t", 2), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let c = consistency(&m).unwrap();
        assert_eq!(c.best_group, "g0");
        assert!(c.per_topic.iter().all(|t| t.group == "g0"));
    }

    #[test]
    fn incomplete_matrix() {
        let mut m = ScoreMatrix::new(names("g", 2), names("t", 2));
        m.set(0, 0, 0.5);
        m.set(0, 1, 0.5);
        m.set(1, 0, 0.5);
        assert!(matches!(consistency(&m), Err(MetricError::IncompleteMatrix(_))));
        m.set(1, 1, 0.4);
        assert!(consistency(&m).is_ok());
        let empty = ScoreMatrix::new(vec![], names("t", 1));
        assert!(consistency(&empty).is_err());
    }

    #[test]
    fn significance_ratios() {
        assert_eq!(significance(&[0.5, 0.5, 0.5]).unwrap(), 1.0);
        assert!((significance(&[0.8, 0.6, 0.4]).unwrap() - 2.0).abs() < 1e-12);
        assert!((significance(&[0.9, 0.3]).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(significance(&[0.9, 0.0]), Err(MetricError::DegenerateScore(0.0)));
    }
}
