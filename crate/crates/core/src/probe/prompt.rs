use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::survey::Question;

use super::{ProbeError, SteeringContext};

pub const GENERAL_INSTRUCTION: &str =
    "Please read the following multiple-choice question carefully and select ONE of the listed options.";

pub const EXAMPLE_INSTRUCTION: &str = "Please read the multiple-choice question below carefully and select ONE of the listed options. Here is an example of the format:

Question: Question_1
A. Option_1
B. Option_2
C. Option_3
Answer: C";

/// Optional instruction block placed before the question.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstructionVariant {
    #[default]
    None,
    General,
    Example,
}

impl InstructionVariant {
    pub fn text(self) -> Option<&'static str> {
        match self {
            InstructionVariant::None => None,
            InstructionVariant::General => Some(GENERAL_INSTRUCTION),
            InstructionVariant::Example => Some(EXAMPLE_INSTRUCTION),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InstructionVariant::None => "none",
            InstructionVariant::General => "general",
            InstructionVariant::Example => "example",
        }
    }
}

/// Order and labels in which a question's options are shown.
///
/// Presented slot `j` shows non-refusal option `order[j]` under the label the
/// question gives its `j`-th option, so a permuted question is relabelled in
/// presentation order. The refusal option, if any, is always shown last
/// under its own label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Presentation {
    order: Vec<usize>,
    labels: Vec<String>,
    refusal_label: Option<String>,
}

impl Presentation {
    pub fn identity(question: &Question) -> Self {
        Self::new(question, &(0..question.n()).collect::<Vec<_>>()).expect("identity is a bijection")
    }

    pub fn new(question: &Question, permutation: &[usize]) -> Result<Self, ProbeError> {
        let n = question.n();
        if permutation.len() != n {
            return Err(ProbeError::BadPermutation(format!(
                "{}: permutation has {} entries for {n} options",
                question.qid,
                permutation.len()
            )));
        }
        let mut seen = HashSet::new();
        if permutation.iter().any(|&i| i >= n || !seen.insert(i)) {
            return Err(ProbeError::BadPermutation(format!(
                "{}: {permutation:?} is not a permutation of 0..{n}",
                question.qid
            )));
        }
        Ok(Self {
            order: permutation.to_vec(),
            labels: question.non_refusal_options().iter().map(|o| o.label.clone()).collect(),
            refusal_label: question.refusal_option().map(|o| o.label.clone()),
        })
    }

    /// A uniformly random order drawn from `seed`.
    pub fn seeded(question: &Question, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..question.n()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::new(question, &order).expect("shuffle is a bijection")
    }

    pub fn permutation(&self) -> &[usize] {
        &self.order
    }

    pub fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(i, &o)| i == o)
    }

    /// (label, original option index) for each presented non-refusal slot.
    pub fn slots(&self) -> impl Iterator<Item = (&str, usize)> {
        self.labels.iter().map(String::as_str).zip(self.order.iter().copied())
    }

    pub fn substantive_labels(&self) -> Vec<&str> {
        self.labels.iter().map(String::as_str).collect()
    }

    pub fn refusal_label(&self) -> Option<&str> {
        self.refusal_label.as_deref()
    }

    /// Every label a model may answer with, refusal last.
    pub fn expected_labels(&self) -> Vec<&str> {
        let mut all = self.substantive_labels();
        all.extend(self.refusal_label());
        all
    }

    /// Original option index shown under `label`.
    pub fn original_index(&self, label: &str) -> Option<usize> {
        if let Some(j) = self.labels.iter().position(|l| l == label) {
            return Some(self.order[j]);
        }
        (self.refusal_label.as_deref() == Some(label)).then_some(self.order.len())
    }
}

/// Per-question permutation seed: the same for every model and context.
pub fn permutation_seed(run_seed: u64, qid: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(run_seed.to_le_bytes())
        .chain_update(qid.as_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// A fully rendered prompt plus everything needed to read its answer back.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptSpec {
    pub qid: String,
    pub context: SteeringContext,
    pub instruction: InstructionVariant,
    pub presentation: Presentation,
    pub text: String,
}

impl PromptSpec {
    /// Stable hex digest of the rendered text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }
}

/// Renders a question as a multiple-choice prompt:
///
/// ```text
/// [context]
///
/// [instruction]
///
/// Question: {text}
/// A. {option}
/// ...
/// Answer:
/// ```
pub fn build_prompt(
    question: &Question,
    context: &SteeringContext,
    instruction: InstructionVariant,
    permutation: &[usize],
) -> Result<PromptSpec, ProbeError> {
    let presentation = Presentation::new(question, permutation)?;
    Ok(render(question, context, instruction, presentation))
}

pub fn build_prompt_with(
    question: &Question,
    context: &SteeringContext,
    instruction: InstructionVariant,
    presentation: Presentation,
) -> PromptSpec {
    render(question, context, instruction, presentation)
}

fn render(
    question: &Question,
    context: &SteeringContext,
    instruction: InstructionVariant,
    presentation: Presentation,
) -> PromptSpec {
    let mut blocks: Vec<String> = Vec::new();
    if !context.rendered_text.is_empty() {
        blocks.push(context.rendered_text.clone());
    }
    if let Some(text) = instruction.text() {
        blocks.push(text.to_string());
    }
    let mut body = format!("Question: {}\n", question.text);
    for (label, idx) in presentation.slots() {
        body.push_str(&format!("{label}. {}\n", question.options[idx].text));
    }
    if let (Some(label), Some(opt)) = (presentation.refusal_label(), question.refusal_option()) {
        body.push_str(&format!("{label}. {}\n", opt.text));
    }
    body.push_str("Answer:");
    blocks.push(body);
    PromptSpec {
        qid: question.qid.clone(),
        context: context.clone(),
        instruction,
        presentation,
        text: blocks.join("\n\n"),
    }
}
