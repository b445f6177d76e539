use std::collections::BTreeMap;

use crate::distribution::DistributionSet;
use crate::probe::ContextKind;
use crate::survey::Question;

use super::{temperature_scale, wasserstein_1d, MetricError, OrdinalSupport};

/// Similarity of two distributions on one question: `1 - WD / (N - 1)`.
///
/// The normalizer is always `N - 1` with `N` counting every non-refusal
/// option, hedge included, even though a hedge support cannot reach it.
pub fn question_alignment(question: &Question, left: &[f64], right: &[f64]) -> Result<f64, MetricError> {
    let support = OrdinalSupport::for_question(question);
    let wd = wasserstein_1d(left, right, &support.values)
        .map_err(|e| MetricError::SupportMismatch(format!("{}: {e}", question.qid)))?;
    let n = question.n() as f64;
    Ok((1.0 - wd / (n - 1.0)).clamp(0.0, 1.0))
}

/// Two distributions over the same question.
#[derive(Debug, Clone, Copy)]
pub struct DistPair<'a> {
    pub question: &'a Question,
    pub left: &'a [f64],
    pub right: &'a [f64],
}

/// Mean per-question alignment over a question set.
pub fn alignment<'a, I>(pairs: I) -> Result<f64, MetricError>
where
    I: IntoIterator<Item = DistPair<'a>>,
{
    let mut total = 0.0;
    let mut count = 0usize;
    for p in pairs {
        total += question_alignment(p.question, p.left, p.right)?;
        count += 1;
    }
    if count == 0 {
        return Err(MetricError::EmptySet);
    }
    Ok(total / count as f64)
}

/// An alignment value with the number of questions it covers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentScore {
    pub value: f64,
    pub questions: usize,
    /// Questions lacking a distribution on either side.
    pub skipped: usize,
}

/// Alignment between two distribution sets on the questions both cover.
pub fn representativeness(
    model: &DistributionSet,
    reference: &DistributionSet,
    questions: &[&Question],
) -> Result<AlignmentScore, MetricError> {
    let mut pairs = Vec::with_capacity(questions.len());
    for q in questions {
        if let (Some(m), Some(r)) = (model.get(&q.qid), reference.get(&q.qid)) {
            pairs.push(DistPair {
                question: q,
                left: &m.probs,
                right: &r.probs,
            });
        }
    }
    let used = pairs.len();
    Ok(AlignmentScore {
        value: alignment(pairs)?,
        questions: used,
        skipped: questions.len() - used,
    })
}

/// Representativeness against temperature-sharpened reference distributions.
pub fn modal_representativeness(
    model: &DistributionSet,
    group: &DistributionSet,
    questions: &[&Question],
    temperature: f64,
) -> Result<AlignmentScore, MetricError> {
    let mut sharpened = DistributionSet::new();
    for q in questions {
        if let Some(d) = group.get(&q.qid) {
            let mut s = d.clone();
            s.probs = temperature_scale(&d.probs, temperature)?;
            sharpened.insert(q.qid.clone(), s);
        }
    }
    representativeness(model, &sharpened, questions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteerabilityScore {
    /// Mean over questions of the best context's alignment.
    pub value: f64,
    pub questions: usize,
    /// Mean alignment of each context over the questions it was evaluated on.
    pub per_context: BTreeMap<ContextKind, f64>,
    /// How often each context was the per-question winner.
    pub best_context: BTreeMap<ContextKind, usize>,
    /// (question, context) pairs with no model distribution.
    pub missing: usize,
}

/// Per-question best-of-contexts alignment to a group, averaged over questions.
///
/// Contexts are the keys of `by_context`; a context without a distribution on
/// some question is skipped there (and counted), never scored as zero. Ties
/// go to the earlier context in declaration order.
pub fn steerability(
    by_context: &BTreeMap<ContextKind, DistributionSet>,
    group: &DistributionSet,
    questions: &[&Question],
) -> Result<SteerabilityScore, MetricError> {
    let mut sums: BTreeMap<ContextKind, (f64, usize)> = BTreeMap::new();
    let mut best_context: BTreeMap<ContextKind, usize> = BTreeMap::new();
    let mut total = 0.0;
    let mut used = 0usize;
    let mut missing = 0usize;

    for q in questions {
        let Some(target) = group.get(&q.qid) else {
            continue;
        };
        let mut best: Option<(ContextKind, f64)> = None;
        for (&ctx, dists) in by_context {
            let Some(d) = dists.get(&q.qid) else {
                missing += 1;
                continue;
            };
            let a = question_alignment(q, &d.probs, &target.probs)?;
            let slot = sums.entry(ctx).or_default();
            slot.0 += a;
            slot.1 += 1;
            if best.map_or(true, |(_, b)| a > b) {
                best = Some((ctx, a));
            }
        }
        if let Some((ctx, a)) = best {
            total += a;
            used += 1;
            *best_context.entry(ctx).or_default() += 1;
        }
    }
    if missing > 0 {
        log::warn!("steerability: {missing} (question, context) pairs had no model distribution");
    }
    if used == 0 {
        return Err(MetricError::EmptySet);
    }
    Ok(SteerabilityScore {
        value: total / used as f64,
        questions: used,
        per_context: sums.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect(),
        best_context,
        missing,
    })
}

/// Mean pairwise normalized distance between group opinions on a question.
pub fn contentiousness(question: &Question, group_dists: &[&[f64]]) -> Result<f64, MetricError> {
    if group_dists.len() < 2 {
        return Err(MetricError::EmptyCell(question.qid.clone()));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in group_dists.iter().enumerate() {
        for b in &group_dists[i + 1..] {
            total += 1.0 - question_alignment(question, a, b)?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{OpinionDistribution, Provenance};
    use crate::survey::test_support::ordinal_question;

    fn set(entries: &[(&str, Vec<f64>)]) -> DistributionSet {
        entries
            .iter()
            .map(|(qid, p)| {
                (
                    qid.to_string(),
                    OpinionDistribution {
                        qid: qid.to_string(),
                        probs: p.clone(),
                        refusal_rate: None,
                        provenance: Provenance::HumanOverall,
                    },
                )
            })
            .collect()
    }

    #[test]
    fn alignment_extremes() {
        let q = ordinal_question("q", 4, true);
        let d = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(question_alignment(&q, &d, &d).unwrap(), 1.0);
        let lo = [1.0, 0.0, 0.0, 0.0];
        let hi = [0.0, 0.0, 0.0, 1.0];
        assert_eq!(question_alignment(&q, &lo, &hi).unwrap(), 0.0);
    }

    #[test]
    fn alignment_is_mean_over_questions() {
        // q1 identical (1.0); q2 point masses one step apart on 3 options (1 - 1/2 = 0.5).
        let q1 = ordinal_question("q1", 2, false);
        let q2 = ordinal_question("q2", 3, false);
        let pairs = [
            DistPair {
                question: &q1,
                left: &[0.3, 0.7],
                right: &[0.3, 0.7],
            },
            DistPair {
                question: &q2,
                left: &[1.0, 0.0, 0.0],
                right: &[0.0, 1.0, 0.0],
            },
        ];
        assert!((alignment(pairs).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(alignment(Vec::<DistPair>::new()), Err(MetricError::EmptySet));
    }

    #[test]
    fn uniform_vs_point_mass() {
        // WD([1/3,1/3,1/3], δ1) = 2/3 + 1/3 = 1, so R = 1 - 1/2.
        let q = ordinal_question("q", 3, false);
        let qs = [&q];
        let model = set(&[("q", vec![1.0 / 3.0; 3])]);
        let human = set(&[("q", vec![1.0, 0.0, 0.0])]);
        let r = representativeness(&model, &human, &qs).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert_eq!((r.questions, r.skipped), (1, 0));
    }

    #[test]
    fn representativeness_decomposes() {
        let q1 = ordinal_question("q1", 3, false);
        let q2 = ordinal_question("q2", 3, false);
        let model = set(&[("q1", vec![0.2, 0.5, 0.3]), ("q2", vec![0.6, 0.1, 0.3])]);
        let human = set(&[("q1", vec![0.1, 0.1, 0.8]), ("q2", vec![0.3, 0.3, 0.4])]);
        let both = representativeness(&model, &human, &[&q1, &q2]).unwrap().value;
        let r1 = representativeness(&model, &human, &[&q1]).unwrap().value;
        let r2 = representativeness(&model, &human, &[&q2]).unwrap().value;
        assert!((both - (r1 + r2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn missing_questions_are_skipped() {
        let q1 = ordinal_question("q1", 2, false);
        let q2 = ordinal_question("q2", 2, false);
        let model = set(&[("q1", vec![0.5, 0.5])]);
        let human = set(&[("q1", vec![0.5, 0.5]), ("q2", vec![1.0, 0.0])]);
        let r = representativeness(&model, &human, &[&q1, &q2]).unwrap();
        assert_eq!((r.value, r.questions, r.skipped), (1.0, 1, 1));
        assert_eq!(representativeness(&model, &human, &[&q2]), Err(MetricError::EmptySet));
    }

    #[test]
    fn steerability_takes_best_context() {
        // Per-context alignments 0.2, 0.9, 0.5 on a single 2-option question.
        let q = ordinal_question("q", 2, false);
        let group = set(&[("q", vec![1.0, 0.0])]);
        let mut by_ctx = BTreeMap::new();
        by_ctx.insert(ContextKind::Qa, set(&[("q", vec![0.2, 0.8])]));
        by_ctx.insert(ContextKind::Bio, set(&[("q", vec![0.9, 0.1])]));
        by_ctx.insert(ContextKind::Portray, set(&[("q", vec![0.5, 0.5])]));
        let s = steerability(&by_ctx, &group, &[&q]).unwrap();
        assert!((s.value - 0.9).abs() < 1e-12);
        assert_eq!(s.best_context.get(&ContextKind::Bio), Some(&1));
        assert!((s.per_context[&ContextKind::Qa] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn steerability_ties_prefer_declaration_order() {
        let q = ordinal_question("q", 2, false);
        let group = set(&[("q", vec![1.0, 0.0])]);
        let same = set(&[("q", vec![1.0, 0.0])]);
        let by_ctx: BTreeMap<_, _> = [
            (ContextKind::Portray, same.clone()),
            (ContextKind::Bio, same.clone()),
            (ContextKind::Qa, same),
        ]
        .into_iter()
        .collect();
        let s = steerability(&by_ctx, &group, &[&q]).unwrap();
        assert_eq!(s.best_context.keys().collect::<Vec<_>>(), [&ContextKind::Qa]);
    }

    #[test]
    fn steerability_skips_missing_context() {
        let q1 = ordinal_question("q1", 2, false);
        let q2 = ordinal_question("q2", 2, false);
        let group = set(&[("q1", vec![1.0, 0.0]), ("q2", vec![1.0, 0.0])]);
        let mut by_ctx = BTreeMap::new();
        by_ctx.insert(ContextKind::Qa, set(&[("q1", vec![1.0, 0.0]), ("q2", vec![0.0, 1.0])]));
        by_ctx.insert(ContextKind::Bio, set(&[("q1", vec![0.0, 1.0])]));
        let s = steerability(&by_ctx, &group, &[&q1, &q2]).unwrap();
        assert_eq!(s.missing, 1);
        // q1 best = 1.0 (QA), q2 only QA = 0.0.
        assert!((s.value - 0.5).abs() < 1e-12);
        assert_eq!(s.per_context[&ContextKind::Bio], 0.0);
    }

    #[test]
    fn modal_sharpening() {
        let q = ordinal_question("q", 3, false);
        let group = set(&[("q", vec![0.6, 0.3, 0.1])]);
        let modal_model = set(&[("q", vec![1.0, 0.0, 0.0])]);
        let r = modal_representativeness(&modal_model, &group, &[&q], 1e-3).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = modal_representativeness(&group, &group, &[&q], 1e-3).unwrap();
        assert!(r.value < 1.0);
    }

    #[test]
    fn contentiousness_values() {
        let q = ordinal_question("q", 3, false);
        let a = [0.2, 0.3, 0.5];
        assert_eq!(contentiousness(&q, &[&a, &a, &a]).unwrap(), 0.0);
        let lo = [1.0, 0.0, 0.0];
        let hi = [0.0, 0.0, 1.0];
        assert_eq!(contentiousness(&q, &[&lo, &hi]).unwrap(), 1.0);
        assert!(matches!(contentiousness(&q, &[&lo]), Err(MetricError::EmptyCell(_))));
    }

    #[test]
    fn contentiousness_is_pairwise_mean() {
        // On a 6-option scale, point masses at 1, 2 and 4 are 0.2, 0.6 and 0.4
        // apart after normalizing by 5; the mean is 0.4.
        let q = ordinal_question("q", 6, false);
        let at = |i: usize| {
            let mut v = vec![0.0; 6];
            v[i] = 1.0;
            v
        };
        let (a, b, c) = (at(0), at(1), at(3));
        let got = contentiousness(&q, &[&a, &b, &c]).unwrap();
        assert!((got - 0.4).abs() < 1e-12, "{got}");
    }
}
