//! Ranked candidate lists shared by the neural and BM25 rankers.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, QuestionId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub id: QuestionId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub anchor: QuestionId,
    /// Highest score first.
    pub entries: Vec<RankedEntry>,
    /// 1-based position of the best-ranked gold duplicate.
    pub gold_rank: Option<usize>,
}

impl RankedList {
    /// Sort scored candidates by descending score; ties go to the older
    /// question, then the smaller id.
    pub fn from_scores(
        anchor: QuestionId,
        mut scored: Vec<RankedEntry>,
        corpus: &Corpus,
        gold: &[QuestionId],
    ) -> Self {
        let created = |id| corpus.get(id).map(|r| r.created_at);
        scored.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| created(a.id).cmp(&created(b.id)))
                .then_with(|| a.id.cmp(&b.id))
        });
        let gold_rank = scored
            .iter()
            .position(|e| gold.contains(&e.id))
            .map(|p| p + 1);
        Self {
            anchor,
            entries: scored,
            gold_rank,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = QuestionId> + '_ {
        self.entries.iter().map(|e| e.id)
    }
}

/// One line per anchor: `anchor_id<TAB>gold_rank_or_minus1<TAB>id,id,...`
/// listing the top `k` candidates.
pub fn write_ranked(path: &Path, lists: &[RankedList], k: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for list in lists {
        let mut line = String::new();
        let gold = list.gold_rank.map_or(-1, |r| r as i64);
        write!(line, "{}\t{}\t", list.anchor, gold).unwrap();
        let top: Vec<String> = list.ids().take(k).map(|id| id.to_string()).collect();
        line.push_str(&top.join(","));
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedLine {
    pub anchor: QuestionId,
    pub gold_rank: Option<usize>,
    pub top: Vec<QuestionId>,
}

pub fn read_ranked(path: &Path) -> Result<Vec<RankedLine>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::format(i + 1, format!("{}: {what}", path.display()));
        let mut fields = line.splitn(3, '\t');
        let anchor = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad anchor id"))?;
        let gold: i64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad gold rank"))?;
        let top = fields
            .next()
            .unwrap_or("")
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| bad("bad candidate id")))
            .collect::<Result<Vec<_>>>()?;
        out.push(RankedLine {
            anchor,
            gold_rank: (gold > 0).then_some(gold as usize),
            top,
        });
    }
    Ok(out)
}
