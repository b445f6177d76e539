use std::fmt;

use serde::{Deserialize, Serialize};

use crate::survey::DemographicAttribute;

use super::ProbeError;

/// How (if at all) a prompt is steered towards a demographic group.
///
/// Declaration order doubles as the tie-break order for best-context choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextKind {
    None,
    Qa,
    Bio,
    Portray,
}

impl ContextKind {
    pub const STEERING: [ContextKind; 3] = [ContextKind::Qa, ContextKind::Bio, ContextKind::Portray];

    pub fn name(self) -> &'static str {
        match self {
            ContextKind::None => "none",
            ContextKind::Qa => "qa",
            ContextKind::Bio => "bio",
            ContextKind::Portray => "portray",
        }
    }
}

impl fmt::Display for ContextKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SteeringContext {
    pub kind: ContextKind,
    pub attribute: Option<String>,
    pub group: Option<String>,
    pub rendered_text: String,
}

impl SteeringContext {
    pub fn none() -> Self {
        Self {
            kind: ContextKind::None,
            attribute: None,
            group: None,
            rendered_text: String::new(),
        }
    }

    /// Short identifier used in provenance and tables, e.g. `qa:POLPARTY=Democrat`.
    pub fn tag(&self) -> String {
        match (&self.attribute, &self.group) {
            (Some(a), Some(g)) => format!("{}:{a}={g}", self.kind),
            _ => self.kind.to_string(),
        }
    }
}

/// Wording of the steering contexts. `{attribute}` and `{group}` are
/// substituted; QA contexts replay the attribute's own survey item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SteeringTemplates {
    pub version: String,
    pub bio: String,
    pub portray: String,
    /// Used for QA when the attribute carries no survey wording.
    pub qa_question: String,
}

impl Default for SteeringTemplates {
    fn default() -> Self {
        Self {
            version: "1".into(),
            bio: "Below is a response I wrote to a question about my {attribute}: {group}.".into(),
            portray: "Answer the following question as if you were {group}.".into(),
            qa_question: "What is your {attribute}?".into(),
        }
    }
}

/// Default presentation labels: A, B, ..., Z, AA, AB, ...
pub fn default_label(i: usize) -> String {
    let mut n = i;
    let mut out = Vec::new();
    loop {
        out.push((b'A' + (n % 26) as u8) as char);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    out.iter().rev().collect()
}

impl SteeringTemplates {
    pub fn render(
        &self,
        kind: ContextKind,
        attribute: &DemographicAttribute,
        group: &str,
    ) -> Result<SteeringContext, ProbeError> {
        let Some(position) = attribute.groups.iter().position(|g| g == group) else {
            return Err(ProbeError::UnknownGroup {
                attribute: attribute.name.clone(),
                group: group.to_string(),
            });
        };
        let phrase = attribute.group_phrase(group);
        let fill = |template: &str| {
            template
                .replace("{attribute}", &attribute.describe())
                .replace("{group}", phrase)
        };
        let rendered_text = match kind {
            ContextKind::None => return Ok(SteeringContext::none()),
            ContextKind::Bio => fill(&self.bio),
            ContextKind::Portray => fill(&self.portray),
            ContextKind::Qa => {
                let question = attribute.question.clone().unwrap_or_else(|| fill(&self.qa_question));
                let mut text = format!("Question: {question}\n");
                for (i, g) in attribute.groups.iter().enumerate() {
                    text.push_str(&format!("{}. {g}\n", default_label(i)));
                }
                text.push_str(&format!("Answer: {}", default_label(position)));
                text
            }
        };
        let mentions = rendered_text.contains(phrase) || rendered_text.contains(group);
        if rendered_text.trim().is_empty() || !mentions {
            return Err(ProbeError::Template(format!(
                "{kind} context for {}={group} does not mention the group",
                attribute.name
            )));
        }
        Ok(SteeringContext {
            kind,
            attribute: Some(attribute.name.clone()),
            group: Some(group.to_string()),
            rendered_text,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn party() -> DemographicAttribute {
        let mut a = DemographicAttribute::new(
            "POLPARTY",
            ["Republican", "Democrat", "Independent", "Something else"]
                .map(String::from)
                .to_vec(),
        );
        a.question = Some("In politics today, do you consider yourself a".into());
        a.description = Some("political affiliation".into());
        a.phrasing.insert("Democrat".into(), "a Democrat".into());
        a
    }

    #[test]
    fn portray_and_bio() {
        let t = SteeringTemplates::default();
        let p = t.render(ContextKind::Portray, &party(), "Democrat").unwrap();
        assert_eq!(
            p.rendered_text,
            "Answer the following question as if you were a Democrat."
        );
        let b = t.render(ContextKind::Bio, &party(), "Democrat").unwrap();
        assert_eq!(
            b.rendered_text,
            "Below is a response I wrote to a question about my political affiliation: a Democrat."
        );
        assert_eq!(b.tag(), "bio:POLPARTY=Democrat");
    }

    #[test]
    fn qa_replays_survey_item() {
        let t = SteeringTemplates::default();
        let q = t.render(ContextKind::Qa, &party(), "Democrat").unwrap();
        assert_eq!(
            q.rendered_text,
            "Question: In politics today, do you consider yourself a\nA. Republican\nB. Democrat\nC. Independent\nD. Something else\nAnswer: B"
        );
    }

    #[test]
    fn none_is_empty() {
        let c = SteeringTemplates::default()
            .render(ContextKind::None, &party(), "Democrat")
            .unwrap();
        assert!(c.rendered_text.is_empty());
        assert_eq!(c.kind, ContextKind::None);
    }

    #[test]
    fn unknown_group_and_silent_template() {
        let t = SteeringTemplates::default();
        assert!(matches!(
            t.render(ContextKind::Bio, &party(), "Whig"),
            Err(ProbeError::UnknownGroup { .. })
        ));
        let silent = SteeringTemplates {
            portray: "Answer as yourself.".into(),
            ..Default::default()
        };
        assert!(matches!(
            silent.render(ContextKind::Portray, &party(), "Democrat"),
            Err(ProbeError::Template(_))
        ));
    }

    #[test]
    fn labels_past_z() {
        assert_eq!(default_label(0), "A");
        assert_eq!(default_label(25), "Z");
        assert_eq!(default_label(26), "AA");
        assert_eq!(default_label(27), "AB");
    }
}
