//! Question records, duplicate links and pairs, parsed from StackExchange
//! data dumps.

mod archive;
mod dump;
mod pairs;
mod text;

use std::collections::HashMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use archive::{
    read_pairs, read_questions, write_pairs, write_questions, CorpusStats, GapBuckets,
};
pub use dump::{
    parse_dump_timestamp, parse_links, parse_posts, read_rows, DumpRow, ParsedLinks, ParsedPosts,
};
pub use pairs::{derive_pairs, split_pairs, PairDerivation, SplitAssignment, SplitBoundaries};
pub use text::{is_stopword, preprocess_text};

pub type QuestionId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: QuestionId,
    pub title_raw: String,
    pub body_raw: String,
    pub title_tokens: Vec<String>,
    pub body_tokens: Vec<String>,
    /// Tags in the order the dump lists them.
    pub tags: Vec<String>,
    pub created_at: DateTime<Utc>,
    pub answer_count: u32,
}

impl QuestionRecord {
    pub fn is_answered(&self) -> bool {
        self.answer_count >= 1
    }
}

/// A duplicate-type post link as it appears in the dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateLink {
    pub post_id: QuestionId,
    pub related_post_id: QuestionId,
    pub linked_at: DateTime<Utc>,
}

/// A duplicate pair oriented so the anchor is the newer question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DuplicatePair {
    pub anchor: QuestionId,
    pub master: QuestionId,
    /// Duplicate confirmation time.
    pub linked_at: DateTime<Utc>,
}

/// Read-only view over parsed question records keyed by id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<QuestionRecord>,
    index: HashMap<QuestionId, usize>,
}

impl Corpus {
    /// Records are kept sorted by id. Duplicate ids keep the first occurrence.
    pub fn new(mut records: Vec<QuestionRecord>) -> Self {
        records.sort_by_key(|r| r.id);
        records.dedup_by_key(|r| r.id);
        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id, i))
            .collect();
        Self { records, index }
    }

    pub fn get(&self, id: QuestionId) -> Option<&QuestionRecord> {
        self.index.get(&id).map(|&i| &self.records[i])
    }

    pub fn contains(&self, id: QuestionId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn records(&self) -> &[QuestionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records created strictly before `cutoff`.
    pub fn created_before(&self, cutoff: DateTime<Utc>) -> impl Iterator<Item = &QuestionRecord> {
        self.records.iter().filter(move |r| r.created_at < cutoff)
    }
}
