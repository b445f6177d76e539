//! Measures how closely a language model's answers to multiple-choice
//! survey questions match the opinions of human populations.
//!
//! The pipeline runs survey ingestion ([`survey`]), weighted human opinion
//! distributions ([`human`]), model probing ([`probe`]), alignment metrics
//! ([`metrics`]) and report emission ([`report`]).

pub mod distribution;
pub mod human;
pub mod metrics;
pub mod probe;
pub mod report;
pub mod survey;
pub mod synth;
