use std::collections::BTreeMap;

use serde::Serialize;

use crate::distribution::{OpinionDistribution, Provenance};
use crate::survey::Question;

use super::{Presentation, ProbeError, ProbeResult};

/// A label map with every expected label present, plus which labels were
/// filled in by the missing-mass bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedLogprobs {
    /// Label -> log-probability; a bound of zero mass is `-inf`.
    pub logprobs: BTreeMap<String, f64>,
    pub bounded: Vec<String>,
    /// Set when more than one label is absent and the per-label bound
    /// `min(p_missing, p_min)` could not be granted to each without spending
    /// the leftover mass twice.
    pub shared: bool,
}

impl BoundedLogprobs {
    pub fn total_mass(&self) -> f64 {
        self.logprobs.values().map(|lp| lp.exp()).sum()
    }
}

/// Fills labels that fell outside the returned top K.
///
/// With `p_missing` one minus the mass of every returned token and `p_min`
/// the smallest returned token probability, a single absent label receives
/// `min(p_missing, p_min)`. When `m > 1` labels are absent each receives
/// `min(p_min, p_missing / m)`, which reduces to the single-label rule for
/// `m = 1` and keeps the completed map's total at or below one.
pub fn bound_missing_options(result: &ProbeResult, expected_labels: &[&str]) -> Result<BoundedLogprobs, ProbeError> {
    let present: Vec<(&str, f64)> = expected_labels
        .iter()
        .filter_map(|l| result.logprobs.get(*l).map(|lp| (*l, *lp)))
        .collect();
    if present.is_empty() {
        return Err(ProbeError::AllMissing {
            model_id: result.model_id.clone(),
            prompt_hash: result.prompt_hash.clone(),
        });
    }
    let assigned: f64 = present.iter().map(|(_, lp)| lp.exp()).sum();
    let p_missing = (1.0 - result.raw_mass.max(assigned)).max(0.0);
    let p_min = present.iter().map(|(_, lp)| lp.exp()).fold(result.raw_min, f64::min);

    let absent: Vec<&str> = expected_labels
        .iter()
        .copied()
        .filter(|l| !result.logprobs.contains_key(*l))
        .collect();
    let m = absent.len() as f64;
    let fill = if absent.is_empty() {
        0.0
    } else {
        p_min.min(p_missing / m)
    };
    let shared = absent.len() > 1 && m * p_missing.min(p_min) > p_missing;

    let mut logprobs: BTreeMap<String, f64> = present.iter().map(|(l, lp)| (l.to_string(), *lp)).collect();
    for label in &absent {
        logprobs.insert(label.to_string(), fill.ln());
    }
    Ok(BoundedLogprobs {
        logprobs,
        bounded: absent.iter().map(|l| l.to_string()).collect(),
        shared,
    })
}

/// Probability mass the model put on the substantive labels it returned.
pub fn total_assigned_mass(result: &ProbeResult, presentation: &Presentation) -> f64 {
    presentation
        .substantive_labels()
        .iter()
        .filter_map(|l| result.logprobs.get(*l))
        .map(|lp| lp.exp())
        .sum()
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Converts a complete label map into an opinion distribution in the
/// question's own option order.
///
/// Substantive probabilities are a softmax over the non-refusal labels; the
/// refusal rate is the refusal label's share of the mass over every label.
pub fn extract_distribution(
    logprobs: &BTreeMap<String, f64>,
    question: &Question,
    presentation: &Presentation,
    provenance: Provenance,
) -> Result<OpinionDistribution, ProbeError> {
    let lookup = |label: &str| {
        logprobs.get(label).copied().ok_or_else(|| ProbeError::MissingLabel {
            qid: question.qid.clone(),
            label: label.to_string(),
        })
    };

    let mut substantive = Vec::with_capacity(question.n());
    for (label, original) in presentation.slots() {
        substantive.push((original, lookup(label)?));
    }
    let lps: Vec<f64> = substantive.iter().map(|(_, lp)| *lp).collect();
    let norm = log_sum_exp(&lps);
    if !norm.is_finite() {
        return Err(ProbeError::AllMissing {
            model_id: provenance.to_string(),
            prompt_hash: question.qid.clone(),
        });
    }
    let mut probs = vec![0.0; question.n()];
    for (original, lp) in &substantive {
        probs[*original] = (lp - norm).exp();
    }

    let refusal_rate = match presentation.refusal_label() {
        Some(label) if question.has_refusal() => {
            let lp_refusal = lookup(label)?;
            let mut all = lps.clone();
            all.push(lp_refusal);
            Some((lp_refusal - log_sum_exp(&all)).exp())
        }
        _ => None,
    };

    let dist = OpinionDistribution {
        qid: question.qid.clone(),
        probs,
        refusal_rate,
        provenance,
    };
    dist.check(question)
        .map_err(|e| ProbeError::Template(format!("{}: extracted distribution invalid: {e}", question.qid)))?;
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::test_support::ordinal_question;

    fn result(entries: &[(&str, f64)]) -> ProbeResult {
        ProbeResult {
            prompt_hash: "h".into(),
            model_id: "m".into(),
            logprobs: entries.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
            returned_top_k: entries.len(),
            raw_mass: entries.iter().map(|(_, p)| p.exp()).sum(),
            raw_min: entries.iter().map(|(_, p)| p.exp()).fold(f64::INFINITY, f64::min),
        }
    }

    fn model() -> Provenance {
        Provenance::Model {
            model_id: "m".into(),
            context: "none".into(),
        }
    }

    #[test]
    fn single_missing_label_bound() {
        let r = result(&[("B", 0.5f64.ln()), ("C", 0.3f64.ln())]);
        let b = bound_missing_options(&r, &["A", "B", "C"]).unwrap();
        assert!((b.logprobs["A"].exp() - 0.2).abs() < 1e-12);
        assert_eq!(b.bounded, ["A"]);
        assert!(!b.shared);

        let r = result(&[("B", 0.6f64.ln()), ("C", 0.35f64.ln())]);
        let b = bound_missing_options(&r, &["A", "B", "C"]).unwrap();
        assert!((b.logprobs["A"].exp() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn non_label_tokens_tighten_the_bound() {
        let mut r = result(&[("B", 0.5f64.ln()), ("C", 0.3f64.ln())]);
        // A returned " The" at 0.15 leaves 0.05 unaccounted for.
        r.raw_mass += 0.15;
        r.raw_min = 0.15;
        let b = bound_missing_options(&r, &["A", "B", "C"]).unwrap();
        assert!((b.logprobs["A"].exp() - 0.05).abs() < 1e-12);

        r.raw_mass = 0.5 + 0.3 + 0.19;
        r.raw_min = 0.01;
        let b = bound_missing_options(&r, &["A", "B", "C"]).unwrap();
        assert!((b.logprobs["A"].exp() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn several_missing_labels_share_leftover() {
        let r = result(&[("A", 0.7f64.ln()), ("B", 0.2f64.ln())]);
        let b = bound_missing_options(&r, &["A", "B", "C", "D"]).unwrap();
        assert!((b.logprobs["C"].exp() - 0.05).abs() < 1e-12);
        assert!((b.logprobs["D"].exp() - 0.05).abs() < 1e-12);
        assert!(b.shared);
        assert!(b.total_mass() <= 1.0 + 1e-12);

        // Plenty of leftover: each gets p_min and nothing is shared.
        let r = result(&[("A", 0.1f64.ln()), ("B", 0.1f64.ln())]);
        let b = bound_missing_options(&r, &["A", "B", "C", "D"]).unwrap();
        assert!((b.logprobs["C"].exp() - 0.1).abs() < 1e-12);
        assert!(!b.shared);
    }

    #[test]
    fn no_leftover_means_zero_mass() {
        let r = result(&[("A", 0.0)]);
        let b = bound_missing_options(&r, &["A", "B"]).unwrap();
        assert_eq!(b.logprobs["B"], f64::NEG_INFINITY);
    }

    #[test]
    fn nothing_returned() {
        let r = result(&[("Z", -0.1)]);
        assert!(matches!(
            bound_missing_options(&r, &["A", "B"]),
            Err(ProbeError::AllMissing { .. })
        ));
    }

    #[test]
    fn equal_logprobs_give_uniform() {
        let q = ordinal_question("q", 4, false);
        let map = ["A", "B", "C", "D"].iter().map(|l| (l.to_string(), -2.0)).collect();
        let d = extract_distribution(&map, &q, &Presentation::identity(&q), model()).unwrap();
        assert!(d.probs.iter().all(|p| (p - 0.25).abs() < 1e-15));
        assert_eq!(d.refusal_rate, None);
    }

    #[test]
    fn refusal_share_of_all_labels() {
        let q = ordinal_question("q", 3, true);
        let map = [("A", -1.0), ("B", -2.0), ("C", -3.0), ("D", -4.0)]
            .iter()
            .map(|(l, p)| (l.to_string(), *p))
            .collect();
        let d = extract_distribution(&map, &q, &Presentation::identity(&q), model()).unwrap();
        let e: Vec<f64> = [-1.0f64, -2.0, -3.0, -4.0].iter().map(|x| x.exp()).collect();
        let sub: f64 = e[..3].iter().sum();
        for i in 0..3 {
            assert!((d.probs[i] - e[i] / sub).abs() < 1e-15);
        }
        let all: f64 = e.iter().sum();
        assert!((d.refusal_rate.unwrap() - e[3] / all).abs() < 1e-15);
    }

    #[test]
    fn unpermutes_into_survey_order() {
        let q = ordinal_question("q", 3, false);
        let pres = Presentation::new(&q, &[2, 0, 1]).unwrap();
        // Label A shows option 2, B shows option 0, C shows option 1.
        let map = [("A", 0.5f64.ln()), ("B", 0.3f64.ln()), ("C", 0.2f64.ln())]
            .iter()
            .map(|(l, p)| (l.to_string(), *p))
            .collect();
        let d = extract_distribution(&map, &q, &pres, model()).unwrap();
        let expect = [0.3, 0.2, 0.5];
        for (p, e) in d.probs.iter().zip(expect) {
            assert!((p - e).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_label_is_an_error() {
        let q = ordinal_question("q", 2, false);
        let map = [("A".to_string(), -0.1)].into_iter().collect();
        assert!(matches!(
            extract_distribution(&map, &q, &Presentation::identity(&q), model()),
            Err(ProbeError::MissingLabel { .. })
        ));
    }

    #[test]
    fn assigned_mass_excludes_refusal() {
        let q = ordinal_question("q", 2, true);
        let r = result(&[("A", 0.5f64.ln()), ("B", 0.25f64.ln()), ("C", 0.2f64.ln())]);
        assert!((total_assigned_mass(&r, &Presentation::identity(&q)) - 0.75).abs() < 1e-15);
    }
}
