//! Alignment mathematics over ordinal answer scales.
//!
//! Every score here is built on the 1-D Wasserstein distance between two
//! distributions placed on a question's [`OrdinalSupport`]. Alignment is one
//! minus that distance normalized by `N - 1`, averaged over questions; the
//! representativeness, steerability, modal and consistency scores are all
//! different ways of choosing which pairs of distributions to align.

mod alignment;
mod consistency;
mod report;
mod sharpen;
mod support;
mod wasserstein;

pub use alignment::{
    alignment, contentiousness, modal_representativeness, question_alignment, representativeness, steerability,
    AlignmentScore, DistPair, SteerabilityScore,
};
pub use consistency::{consistency, significance, Consistency, ScoreMatrix, TopicBest};
pub use report::{ConsistencyRow, GroupScore, MetricReport, ProbeDiagnostics, SteeringRow, TopicRow};
pub use sharpen::{entropy, temperature_scale, DEFAULT_MODAL_TEMPERATURE};
pub use support::OrdinalSupport;
pub use wasserstein::wasserstein_1d;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("no questions to score")]
    EmptySet,
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("incomplete score matrix: {0}")]
    IncompleteMatrix(String),
    #[error("significance needs strictly positive scores, got {0}")]
    DegenerateScore(f64),
    #[error("not enough distributions for question {0}")]
    EmptyCell(String),
}
