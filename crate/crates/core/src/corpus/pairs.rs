use std::collections::HashMap;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::{Corpus, DuplicateLink, DuplicatePair, QuestionId};

#[derive(Debug, Default)]
pub struct PairDerivation {
    pub pairs: Vec<DuplicatePair>,
    pub self_links: usize,
    pub unresolved: usize,
    /// Links repeating an unordered id pair already seen (either direction).
    pub repeated_links: usize,
    /// Pairs whose link predates the anchor's posting time. Kept.
    pub early_links: usize,
}

impl PairDerivation {
    pub fn dropped(&self) -> usize {
        self.self_links + self.unresolved + self.repeated_links
    }
}

/// Orient each link so that the newer question is the anchor.
///
/// Equal creation times make the larger id the anchor. Repeated links on
/// the same unordered pair keep the earliest confirmation time.
pub fn derive_pairs(links: &[DuplicateLink], corpus: &Corpus) -> PairDerivation {
    let mut out = PairDerivation::default();
    let mut by_key: HashMap<(QuestionId, QuestionId), usize> = HashMap::new();

    for link in links {
        let (a, b) = (link.post_id, link.related_post_id);
        if a == b {
            out.self_links += 1;
            continue;
        }
        let (Some(qa), Some(qb)) = (corpus.get(a), corpus.get(b)) else {
            out.unresolved += 1;
            continue;
        };
        let a_is_newer = (qa.created_at, qa.id) > (qb.created_at, qb.id);
        let (anchor, master) = if a_is_newer { (a, b) } else { (b, a) };
        let key = (a.min(b), a.max(b));
        match by_key.get(&key) {
            Some(&idx) => {
                out.repeated_links += 1;
                if link.linked_at < out.pairs[idx].linked_at {
                    out.pairs[idx].linked_at = link.linked_at;
                }
            }
            None => {
                by_key.insert(key, out.pairs.len());
                out.pairs.push(DuplicatePair {
                    anchor,
                    master,
                    linked_at: link.linked_at,
                });
            }
        }
    }

    out.early_links = out
        .pairs
        .iter()
        .filter(|p| p.linked_at < corpus.get(p.anchor).map(|r| r.created_at).unwrap_or(p.linked_at))
        .count();
    out
}

/// Half-open `[start, end)` confirmation-time windows for each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitBoundaries {
    pub train_start: DateTime<Utc>,
    pub train_end: DateTime<Utc>,
    pub validation_start: DateTime<Utc>,
    pub validation_end: DateTime<Utc>,
    pub test_start: DateTime<Utc>,
    pub test_end: DateTime<Utc>,
}

impl Default for SplitBoundaries {
    fn default() -> Self {
        let day = |y, m, d| Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap();
        Self {
            train_start: day(2010, 1, 1),
            train_end: day(2019, 1, 1),
            validation_start: day(2019, 10, 1),
            validation_end: day(2020, 1, 1),
            test_start: day(2020, 10, 1),
            test_end: day(2021, 1, 1),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<DuplicatePair>,
    pub validation: Vec<DuplicatePair>,
    pub test: Vec<DuplicatePair>,
}

fn within(t: DateTime<Utc>, start: DateTime<Utc>, end: DateTime<Utc>) -> bool {
    start <= t && t < end
}

/// Assign pairs to splits by confirmation time. Pairs outside every window
/// are left out.
pub fn split_pairs(pairs: &[DuplicatePair], bounds: &SplitBoundaries) -> SplitAssignment {
    let mut out = SplitAssignment::default();
    for p in pairs {
        let t = p.linked_at;
        if within(t, bounds.train_start, bounds.train_end) {
            out.train.push(*p);
        } else if within(t, bounds.validation_start, bounds.validation_end) {
            out.validation.push(*p);
        } else if within(t, bounds.test_start, bounds.test_end) {
            out.test.push(*p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::QuestionRecord;
    use proptest::prelude::*;

    fn ts(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, mo, d, h, mi, s).unwrap()
    }

    fn rec(id: QuestionId, created_at: DateTime<Utc>) -> QuestionRecord {
        QuestionRecord {
            id,
            title_raw: String::new(),
            body_raw: String::new(),
            title_tokens: vec![],
            body_tokens: vec![],
            tags: vec!["t".into()],
            created_at,
            answer_count: 1,
        }
    }

    fn link(a: QuestionId, b: QuestionId, at: DateTime<Utc>) -> DuplicateLink {
        DuplicateLink {
            post_id: a,
            related_post_id: b,
            linked_at: at,
        }
    }

    #[test]
    fn newer_question_is_anchor() {
        let corpus = Corpus::new(vec![
            rec(1, ts(2012, 5, 30, 18, 58, 11)),
            rec(2, ts(2012, 11, 7, 13, 35, 45)),
        ]);
        let linked = ts(2013, 2, 18, 3, 3, 21);
        let out = derive_pairs(&[link(1, 2, linked)], &corpus);
        assert_eq!(
            out.pairs,
            vec![DuplicatePair {
                anchor: 2,
                master: 1,
                linked_at: linked
            }]
        );
    }

    #[test]
    fn equal_times_break_by_larger_id() {
        let t = ts(2015, 1, 1, 0, 0, 0);
        let corpus = Corpus::new(vec![rec(3, t), rec(9, t)]);
        let out = derive_pairs(&[link(3, 9, t)], &corpus);
        assert_eq!(out.pairs[0].anchor, 9);
        assert_eq!(out.pairs[0].master, 3);
    }

    #[test]
    fn self_links_and_repeats_dropped() {
        let corpus = Corpus::new(vec![rec(1, ts(2012, 1, 1, 0, 0, 0)), rec(2, ts(2013, 1, 1, 0, 0, 0))]);
        let links = vec![
            link(1, 1, ts(2014, 1, 1, 0, 0, 0)),
            link(2, 1, ts(2014, 6, 1, 0, 0, 0)),
            link(1, 2, ts(2014, 1, 1, 0, 0, 0)),
            link(2, 5, ts(2014, 1, 1, 0, 0, 0)),
        ];
        let out = derive_pairs(&links, &corpus);
        assert_eq!(out.self_links, 1);
        assert_eq!(out.repeated_links, 1);
        assert_eq!(out.unresolved, 1);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].linked_at, ts(2014, 1, 1, 0, 0, 0));
        assert_eq!(out.pairs.len() + out.dropped(), links.len());
    }

    #[test]
    fn early_links_are_flagged_not_dropped() {
        let corpus = Corpus::new(vec![rec(1, ts(2012, 1, 1, 0, 0, 0)), rec(2, ts(2013, 1, 1, 0, 0, 0))]);
        let out = derive_pairs(&[link(1, 2, ts(2012, 6, 1, 0, 0, 0))], &corpus);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.early_links, 1);
    }

    #[test]
    fn split_windows() {
        let bounds = SplitBoundaries::default();
        let pair = |t| DuplicatePair {
            anchor: 2,
            master: 1,
            linked_at: t,
        };
        let pairs = vec![
            pair(ts(2015, 6, 1, 0, 0, 0)),
            pair(ts(2020, 11, 15, 0, 0, 0)),
            pair(ts(2019, 11, 1, 0, 0, 0)),
            pair(ts(2019, 5, 1, 0, 0, 0)),
            pair(ts(2009, 5, 1, 0, 0, 0)),
        ];
        let s = split_pairs(&pairs, &bounds);
        assert_eq!(s.train, vec![pairs[0]]);
        assert_eq!(s.test, vec![pairs[1]]);
        assert_eq!(s.validation, vec![pairs[2]]);
    }

    proptest! {
        #[test]
        fn derived_pairs_oriented_and_counted(
            times in proptest::collection::vec(0i64..1_000, 2..20),
            raw_links in proptest::collection::vec((0usize..20, 0usize..20), 0..40),
        ) {
            let base = ts(2012, 1, 1, 0, 0, 0);
            let records: Vec<_> = times
                .iter()
                .enumerate()
                .map(|(i, &t)| rec(i as u64 + 1, base + chrono::Duration::hours(t)))
                .collect();
            let corpus = Corpus::new(records);
            let links: Vec<_> = raw_links
                .iter()
                .map(|&(a, b)| link(a as u64 + 1, b as u64 + 1, base))
                .collect();
            let out = derive_pairs(&links, &corpus);
            prop_assert_eq!(out.pairs.len() + out.dropped(), links.len());
            for p in &out.pairs {
                let a = corpus.get(p.anchor).unwrap();
                let m = corpus.get(p.master).unwrap();
                prop_assert!(p.anchor != p.master);
                prop_assert!(a.created_at > m.created_at || (a.created_at == m.created_at && a.id > m.id));
            }
            let split = split_pairs(&out.pairs, &SplitBoundaries::default());
            let total = split.train.len() + split.validation.len() + split.test.len();
            prop_assert!(total <= out.pairs.len());
        }
    }
}
