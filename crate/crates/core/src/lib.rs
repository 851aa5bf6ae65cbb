//! Duplicate-question triage for community Q&A archives.
//!
//! Two tasks share one data pipeline:
//! - retrieval: rank older questions as likely duplicates of a new one with
//!   a shared-weight (Siamese) projection over text and tag-graph features,
//!   trained with a triplet margin loss on hard negatives;
//! - confirmation time: predict how long a marked duplicate pair will stay
//!   open, so long-open pairs can be surfaced first.

pub mod baseline;
pub mod checkpoint;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod features;
pub mod optim;
pub mod ranking;
pub mod retrieval;
pub mod synth;
pub mod taggraph;
pub mod timepred;

pub use error::{Error, Result};
