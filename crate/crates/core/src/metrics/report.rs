use std::collections::BTreeMap;

use serde::Serialize;

use crate::probe::ContextKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupScore {
    pub attribute: String,
    pub group: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringRow {
    pub attribute: String,
    pub group: String,
    /// Default (unsteered) representativeness on the steering subset.
    pub default_r: Option<f64>,
    pub steered: Option<f64>,
    pub per_context: BTreeMap<ContextKind, f64>,
    pub best_context: BTreeMap<ContextKind, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub attribute: String,
    pub score: f64,
    pub best_group: String,
    /// Topics dropped because some group had no score on them.
    pub dropped_topics: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicRow {
    pub attribute: String,
    pub topic: String,
    pub group: String,
    pub alpha: Option<f64>,
}

/// Probe coverage statistics for one model's default run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProbeDiagnostics {
    pub questions: usize,
    pub probed: usize,
    pub failed: usize,
    pub mean_mass: Option<f64>,
    pub min_mass: Option<f64>,
    pub max_mass: Option<f64>,
    /// Answer labels filled in by the missing-mass bound.
    pub bounded_labels: usize,
    /// Prompts where several absent labels had to share the missing mass.
    pub shared_bounds: usize,
}

/// Every score computed for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub model_id: String,
    pub overall_r: Option<f64>,
    pub group_r: Vec<GroupScore>,
    pub modal_r: Vec<GroupScore>,
    pub steering: Vec<SteeringRow>,
    pub consistency: Vec<ConsistencyRow>,
    pub topics: Vec<TopicRow>,
    pub mean_entropy: Option<f64>,
    pub refusal_rate: Option<f64>,
    pub diagnostics: ProbeDiagnostics,
}

impl MetricReport {
    pub fn empty(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            overall_r: None,
            group_r: Vec::new(),
            modal_r: Vec::new(),
            steering: Vec::new(),
            consistency: Vec::new(),
            topics: Vec::new(),
            mean_entropy: None,
            refusal_rate: None,
            diagnostics: ProbeDiagnostics::default(),
        }
    }

    /// Checks that alignment-derived scores lie in [0, 1] and every α ≥ 1.
    pub fn check(&self) -> Result<(), String> {
        let unit = |name: &str, v: Option<f64>| match v {
            Some(x) if !(0.0..=1.0).contains(&x) => Err(format!("{name} = {x} outside [0, 1]")),
            _ => Ok(()),
        };
        unit("overall R", self.overall_r)?;
        for g in self.group_r.iter().chain(&self.modal_r) {
            unit(&format!("R[{}={}]", g.attribute, g.group), g.value)?;
        }
        for s in &self.steering {
            unit("default R", s.default_r)?;
            unit("S", s.steered)?;
            for v in s.per_context.values() {
                unit("context mean", Some(*v))?;
            }
        }
        for c in &self.consistency {
            unit("C", Some(c.score))?;
        }
        for t in &self.topics {
            if let Some(a) = t.alpha.filter(|a| *a < 1.0) {
                return Err(format!("alpha {a} < 1 on {}", t.topic));
            }
        }
        unit("refusal", self.refusal_rate)
    }
}
