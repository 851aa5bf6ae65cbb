//! Streaming readers for the StackExchange XML dump format
//! (`Posts.xml`, `PostLinks.xml`): one `<row .../>` element per entity.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use chrono::{DateTime, NaiveDateTime, Timelike, Utc};
use quick_xml::events::Event;
use quick_xml::Reader;

use super::text::preprocess_text;
use super::{DuplicateLink, QuestionId, QuestionRecord};
use crate::error::{Error, Result};

/// Attributes of one `<row>` element.
pub type DumpRow = HashMap<String, String>;

const POST_TYPE_QUESTION: &str = "1";
const POST_TYPE_ANSWER: &str = "2";
const LINK_TYPE_DUPLICATE: &str = "3";

/// Iterate over the `<row>` elements of a dump file.
pub fn read_rows<R: BufRead>(input: R) -> RowIter<R> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().trim_text(true);
    RowIter {
        reader,
        buf: Vec::new(),
        done: false,
    }
}

pub struct RowIter<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> Iterator for RowIter<R> {
    type Item = Result<DumpRow>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::Xml(format!(
                        "at byte {}: {e}",
                        self.reader.buffer_position()
                    ))));
                }
            };
            match event {
                Event::Empty(e) | Event::Start(e) if e.name().as_ref() == b"row" => {
                    let mut row = DumpRow::new();
                    for attr in e.attributes() {
                        let attr = match attr {
                            Ok(a) => a,
                            Err(err) => return Some(Err(Error::Xml(err.to_string()))),
                        };
                        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
                        let value = match attr.unescape_value() {
                            Ok(v) => v.into_owned(),
                            Err(err) => return Some(Err(Error::Xml(err.to_string()))),
                        };
                        row.insert(key, value);
                    }
                    return Some(Ok(row));
                }
                Event::Eof => {
                    self.done = true;
                    return None;
                }
                _ => {}
            }
        }
    }
}

/// Parse a dump timestamp such as `2010-07-28T19:04:21.300`, truncated to
/// whole seconds and interpreted as UTC.
pub fn parse_dump_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let trimmed = raw.trim().trim_end_matches('Z');
    let naive = NaiveDateTime::parse_from_str(trimmed, "%Y-%m-%dT%H:%M:%S%.f")
        .or_else(|_| NaiveDateTime::parse_from_str(trimmed, "%Y-%m-%d %H:%M:%S%.f"))
        .ok()?;
    Some(naive.with_nanosecond(0)?.and_utc())
}

/// Split a tag string. Accepts both `<a><b>` and the newer `|a|b|` form.
fn split_tags(raw: &str) -> Vec<String> {
    let raw = raw.trim();
    let parts: Vec<&str> = if raw.starts_with('<') {
        raw.split(['<', '>']).collect()
    } else {
        raw.split('|').collect()
    };
    parts
        .into_iter()
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Default)]
pub struct ParsedPosts {
    pub questions: Vec<QuestionRecord>,
    /// Answers seen per parent question id, whether or not the parent was
    /// parsed.
    pub answer_counts: HashMap<QuestionId, u32>,
    pub malformed_rows: usize,
    pub answer_rows: usize,
    pub other_rows: usize,
}

struct PendingQuestion {
    record: QuestionRecord,
    explicit_answer_count: bool,
}

fn parse_question_row(row: &DumpRow, id: QuestionId) -> Option<PendingQuestion> {
    let created_at = parse_dump_timestamp(row.get("CreationDate")?)?;
    let title_raw = row.get("Title")?.clone();
    let body_raw = row.get("Body").cloned().unwrap_or_default();
    let tags = split_tags(row.get("Tags")?);
    if tags.is_empty() {
        return None;
    }
    let explicit = row.get("AnswerCount");
    let answer_count = match explicit {
        Some(v) => v.trim().parse().ok()?,
        None => 0,
    };
    Some(PendingQuestion {
        record: QuestionRecord {
            id,
            title_tokens: preprocess_text(&title_raw),
            body_tokens: preprocess_text(&body_raw),
            title_raw,
            body_raw,
            tags,
            created_at,
            answer_count,
        },
        explicit_answer_count: explicit.is_some(),
    })
}

/// Turn post rows into question records.
///
/// Answer rows increment their parent's answer count, which is used only
/// for questions whose row lacks an explicit `AnswerCount` attribute.
pub fn parse_posts<I>(rows: I) -> Result<ParsedPosts>
where
    I: IntoIterator<Item = DumpRow>,
{
    let mut out = ParsedPosts::default();
    let mut pending: Vec<PendingQuestion> = Vec::new();
    let mut seen: HashSet<QuestionId> = HashSet::new();

    for row in rows {
        let Some(id) = row.get("Id").and_then(|v| v.trim().parse::<QuestionId>().ok()) else {
            out.malformed_rows += 1;
            continue;
        };
        if id == 0 {
            out.malformed_rows += 1;
            continue;
        }
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id));
        }
        match row.get("PostTypeId").map(|s| s.trim()) {
            Some(POST_TYPE_QUESTION) => match parse_question_row(&row, id) {
                Some(q) => pending.push(q),
                None => out.malformed_rows += 1,
            },
            Some(POST_TYPE_ANSWER) => {
                match row.get("ParentId").and_then(|v| v.trim().parse::<QuestionId>().ok()) {
                    Some(parent) => {
                        out.answer_rows += 1;
                        *out.answer_counts.entry(parent).or_insert(0) += 1;
                    }
                    None => out.malformed_rows += 1,
                }
            }
            Some(_) => out.other_rows += 1,
            None => out.malformed_rows += 1,
        }
    }

    out.questions = pending
        .into_iter()
        .map(|mut q| {
            if !q.explicit_answer_count {
                q.record.answer_count = out.answer_counts.get(&q.record.id).copied().unwrap_or(0);
            }
            q.record
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Default)]
pub struct ParsedLinks {
    pub links: Vec<DuplicateLink>,
    pub non_duplicate: usize,
    pub unresolved: usize,
    pub malformed_rows: usize,
}

/// Keep duplicate-type links whose endpoints are both known questions.
pub fn parse_links<I, F>(rows: I, is_known: F) -> ParsedLinks
where
    I: IntoIterator<Item = DumpRow>,
    F: Fn(QuestionId) -> bool,
{
    let mut out = ParsedLinks::default();
    for row in rows {
        let parsed = (|| {
            let post_id = row.get("PostId")?.trim().parse::<QuestionId>().ok()?;
            let related = row.get("RelatedPostId")?.trim().parse::<QuestionId>().ok()?;
            let link_type = row.get("LinkTypeId")?.trim().to_string();
            let linked_at = parse_dump_timestamp(row.get("CreationDate")?)?;
            Some((post_id, related, link_type, linked_at))
        })();
        let Some((post_id, related_post_id, link_type, linked_at)) = parsed else {
            out.malformed_rows += 1;
            continue;
        };
        if link_type != LINK_TYPE_DUPLICATE {
            out.non_duplicate += 1;
            continue;
        }
        if !is_known(post_id) || !is_known(related_post_id) {
            out.unresolved += 1;
            continue;
        }
        out.links.push(DuplicateLink {
            post_id,
            related_post_id,
            linked_at,
        });
    }
    out
}
