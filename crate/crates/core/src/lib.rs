//! Revert-risk scoring for knowledge-graph revisions.
//!
//! Revisions are diffed into fine-grained content deltas, every delta is
//! rendered as prefixed text (Graph2Text), a content scorer rates each change,
//! and a gradient-boosted classifier fuses the pooled content score with
//! revision metadata into a revert probability. The evaluation module covers
//! AUC with bootstrap intervals, filter rate at recall, and group fairness.

pub mod classifiers;
pub mod corpus;
pub mod diff;
pub mod entity;
pub mod evaluation;
pub mod graph2text;
pub mod pipeline;
#[cfg(feature = "cli")]
pub mod service;
pub mod synthetic;
