//! Line-delimited JSON archive of parsed questions and pairs, plus summary
//! statistics.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Corpus, DuplicatePair, QuestionRecord};
use crate::error::{Error, Result};

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| Error::format(i + 1, format!("{}: {e}", path.display())))?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_questions(path: &Path, records: &[QuestionRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_questions(path: &Path) -> Result<Vec<QuestionRecord>> {
    read_jsonl(path)
}

pub fn write_pairs(path: &Path, pairs: &[DuplicatePair]) -> Result<()> {
    write_jsonl(path, pairs)
}

pub fn read_pairs(path: &Path) -> Result<Vec<DuplicatePair>> {
    read_jsonl(path)
}

/// Fractions of pairs by confirmation delay after the anchor was posted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GapBuckets {
    pub within_12h: f64,
    pub from_12h_to_5d: f64,
    pub over_5d: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub questions: usize,
    pub answered_questions: usize,
    pub answers: usize,
    pub tags: usize,
    pub duplicate_links: usize,
    pub duplicate_pairs: usize,
    pub malformed_post_rows: usize,
    pub malformed_link_rows: usize,
    pub unresolved_links: usize,
    pub self_links: usize,
    pub repeated_links: usize,
    pub early_links: usize,
    pub confirmation_gap: GapBuckets,
}

impl CorpusStats {
    /// Fill the corpus-derived fields. Parse counters are set by the caller.
    pub fn describe(corpus: &Corpus, pairs: &[DuplicatePair]) -> Self {
        let tags: BTreeSet<&str> = corpus
            .records()
            .iter()
            .flat_map(|r| r.tags.iter().map(String::as_str))
            .collect();
        let mut buckets = GapBuckets::default();
        let mut counted = 0usize;
        for p in pairs {
            let Some(anchor) = corpus.get(p.anchor) else {
                continue;
            };
            let hours = (p.linked_at - anchor.created_at).num_seconds() as f64 / 3600.0;
            counted += 1;
            if hours <= 12.0 {
                buckets.within_12h += 1.0;
            } else if hours <= 120.0 {
                buckets.from_12h_to_5d += 1.0;
            } else {
                buckets.over_5d += 1.0;
            }
        }
        if counted > 0 {
            let n = counted as f64;
            buckets.within_12h /= n;
            buckets.from_12h_to_5d /= n;
            buckets.over_5d /= n;
        }
        Self {
            questions: corpus.len(),
            answered_questions: corpus.records().iter().filter(|r| r.is_answered()).count(),
            tags: tags.len(),
            duplicate_pairs: pairs.len(),
            confirmation_gap: buckets,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn rec(id: u64, hours: i64) -> QuestionRecord {
        QuestionRecord {
            id,
            title_raw: "Grub fails".into(),
            body_raw: "<p>help</p>".into(),
            title_tokens: vec!["grub".into(), "fails".into()],
            body_tokens: vec!["help".into()],
            tags: vec!["boot".into(), "grub2".into()],
            created_at: Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap()
                + chrono::Duration::hours(hours),
            answer_count: id as u32 % 2,
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.jsonl");
        let records = vec![rec(1, 0), rec(2, 5)];
        write_questions(&path, &records).unwrap();
        assert_eq!(read_questions(&path).unwrap(), records);
    }

    #[test]
    fn gap_buckets() {
        let corpus = Corpus::new(vec![rec(1, 0), rec(2, 10), rec(3, 20), rec(4, 30)]);
        let at = |h: i64| Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap() + chrono::Duration::hours(h);
        let pairs = vec![
            DuplicatePair { anchor: 2, master: 1, linked_at: at(12) },
            DuplicatePair { anchor: 3, master: 1, linked_at: at(20 + 48) },
            DuplicatePair { anchor: 4, master: 1, linked_at: at(30 + 200) },
            DuplicatePair { anchor: 4, master: 2, linked_at: at(30 + 121) },
        ];
        let stats = CorpusStats::describe(&corpus, &pairs);
        assert_eq!(stats.confirmation_gap.within_12h, 0.25);
        assert_eq!(stats.confirmation_gap.from_12h_to_5d, 0.25);
        assert_eq!(stats.confirmation_gap.over_5d, 0.5);
        assert_eq!(stats.tags, 2);
        assert_eq!(stats.answered_questions, 2);
    }

    #[test]
    fn bad_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        std::fs::write(&path, "{\"anchor\":2,\"master\":1,\"linked_at\":\"2015-01-01T00:00:00Z\"}\nnot json\n").unwrap();
        match read_pairs(&path) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
