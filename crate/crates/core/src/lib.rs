//! Affective bias auditing.
//!
//! Two halves:
//!
//! * corpus level: [`lexicon`] + [`scan`] count emotion-term occurrences and
//!   their co-occurrence with social-group target terms over large corpora;
//! * prediction level: [`pairs`], [`predictions`] and [`metrics`] compare an
//!   emotion classifier's outputs on sentence pairs that differ only in group
//!   terms, and [`report`] renders the results.

pub mod digest;
pub mod labels;
pub mod lexicon;
pub mod metrics;
pub mod pairs;
pub mod predictions;
pub mod report;
pub mod scan;
pub mod stats;
pub mod synth;
pub mod text;

pub use labels::{Domain, Emotion, Group};
pub use lexicon::{Lexicon, LexiconKind};
