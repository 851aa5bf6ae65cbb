//! Synthetic StackExchange-style dump with planted duplicate pairs, for
//! smoke tests and the end-to-end fixture.
//!
//! Every question draws most of its words from a private "concept"
//! vocabulary; a planted anchor is a perturbed paraphrase of its master's
//! concept words. All questions share a broad tag and a handful of generic
//! title words, so tag and title filters keep most older questions as
//! candidates.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use quick_xml::escape::escape;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::QuestionId;
use crate::error::{Error, Result};

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const GENERIC: [&str; 6] = ["ubuntu", "install", "error", "package", "terminal", "update"];
const BROAD_TAG: &str = "desktop";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    /// Total questions, planted ones included.
    pub questions: usize,
    pub train_pairs: usize,
    pub validation_pairs: usize,
    pub test_pairs: usize,
    pub topics: usize,
    pub concept_words: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            questions: 300,
            train_pairs: 20,
            validation_pairs: 4,
            test_pairs: 6,
            topics: 6,
            concept_words: 8,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub anchor: QuestionId,
    pub master: QuestionId,
    pub split: String,
    pub anchor_title: String,
    pub anchor_body: String,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SynthDump {
    pub posts_xml: String,
    pub links_xml: String,
    pub planted: Vec<PlantedPair>,
}

impl SynthDump {
    /// Writes `Posts.xml`, `PostLinks.xml` and `planted.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, text: &str| {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        put("Posts.xml", &self.posts_xml)?;
        put("PostLinks.xml", &self.links_xml)?;
        put("planted.json", &serde_json::to_string_pretty(&self.planted)?)
    }
}

fn pseudo_word(mut i: usize) -> String {
    let n = CONSONANTS.len() * VOWELS.len();
    let mut out = String::new();
    for _ in 0..3 {
        let s = i % n;
        i /= n;
        out.push(CONSONANTS[s / VOWELS.len()] as char);
        out.push(VOWELS[s % VOWELS.len()] as char);
    }
    out
}

struct Words {
    next: usize,
}

impl Words {
    fn fresh(&mut self, n: usize) -> Vec<String> {
        // Stride through the space so consecutive words look unrelated.
        (0..n)
            .map(|_| {
                self.next += 1;
                pseudo_word((self.next * 7919) % 343_000)
            })
            .collect()
    }
}

struct Draft {
    created: DateTime<Utc>,
    title: Vec<String>,
    body: Vec<String>,
    tags: Vec<String>,
    answers: usize,
}

fn ts(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%S%.3f").to_string()
}

fn uniform_time(rng: &mut ChaCha8Rng, from: DateTime<Utc>, to: DateTime<Utc>) -> DateTime<Utc> {
    let span = (to - from).num_seconds().max(1);
    from + Duration::seconds(rng.random_range(0..span))
}

fn date(y: i32, m: u32, d: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
}

struct Topic {
    tag: String,
    words: Vec<String>,
}

fn draft(rng: &mut ChaCha8Rng, topic: &Topic, concept: &[String], created: DateTime<Utc>, answers: usize) -> Draft {
    let mut title: Vec<String> = GENERIC.choose_multiple(rng, 2).map(|s| s.to_string()).collect();
    title.push(topic.words.choose(rng).unwrap().clone());
    title.extend(concept.iter().take(4).cloned());
    title.shuffle(rng);
    let mut body: Vec<String> = concept.to_vec();
    body.extend(topic.words.choose_multiple(rng, 2).cloned());
    body.push(GENERIC.choose(rng).unwrap().to_string());
    body.shuffle(rng);
    let mut tags = vec![topic.tag.clone(), BROAD_TAG.to_string()];
    if rng.random_bool(0.3) {
        tags.push(format!("release-{}", rng.random_range(1..4)));
    }
    Draft { created, title, body, tags, answers }
}

/// Drop roughly a quarter of the words, add one new one and reorder.
fn paraphrase(rng: &mut ChaCha8Rng, words: &[String], words_src: &mut Words) -> Vec<String> {
    let mut out: Vec<String> = words.iter().filter(|_| !rng.random_bool(0.25)).cloned().collect();
    if out.len() < 2 {
        out = words.to_vec();
    }
    out.extend(words_src.fresh(1));
    out.shuffle(rng);
    out
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthDump> {
    let planted_n = cfg.train_pairs + cfg.validation_pairs + cfg.test_pairs;
    if cfg.questions < 2 * planted_n || cfg.topics == 0 || cfg.concept_words < 4 {
        return Err(Error::Config(
            "synthetic corpus needs at least two questions per planted pair, one topic and four concept words".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut words = Words { next: 0 };
    let topics: Vec<Topic> = (0..cfg.topics)
        .map(|k| Topic { tag: format!("topic-{k}"), words: words.fresh(6) })
        .collect();

    let mut drafts: Vec<Draft> = Vec::new();
    // (anchor draft index, master draft index, split, link time)
    let mut pairs: Vec<(usize, usize, &str, DateTime<Utc>)> = Vec::new();
    let windows = [
        ("train", cfg.train_pairs, date(2011, 1, 1), date(2018, 6, 1), date(2019, 1, 1)),
        ("validation", cfg.validation_pairs, date(2019, 10, 1), date(2019, 12, 20), date(2020, 1, 1)),
        ("test", cfg.test_pairs, date(2020, 10, 1), date(2020, 12, 20), date(2021, 1, 1)),
    ];
    for (split, n, from, to, end) in windows {
        for _ in 0..n {
            let topic = &topics[rng.random_range(0..topics.len())];
            let concept = words.fresh(cfg.concept_words);
            let anchor_at = uniform_time(&mut rng, from, to);
            let master_at = uniform_time(&mut rng, date(2010, 2, 1), anchor_at - Duration::days(20));
            let (m_answers, a_answers) = (rng.random_range(1..3), rng.random_range(0..2));
            let master = draft(&mut rng, topic, &concept, master_at, m_answers);
            let mut anchor = draft(&mut rng, topic, &concept, anchor_at, a_answers);
            anchor.title = paraphrase(&mut rng, &anchor.title, &mut words);
            anchor.body = paraphrase(&mut rng, &anchor.body, &mut words);
            anchor.tags = master.tags.clone();
            let hours = 10f64.powf(rng.random_range(-1.0..2.5));
            let mut linked = anchor_at + Duration::seconds((hours * 3600.0) as i64);
            if linked >= end {
                linked = end - Duration::seconds(1);
            }
            drafts.push(anchor);
            drafts.push(master);
            pairs.push((drafts.len() - 2, drafts.len() - 1, split, linked));
        }
    }
    while drafts.len() < cfg.questions {
        let topic = &topics[rng.random_range(0..topics.len())];
        let concept = words.fresh(cfg.concept_words);
        let at = uniform_time(&mut rng, date(2010, 2, 1), date(2020, 9, 30));
        let answers = if rng.random_bool(0.85) { rng.random_range(1..4) } else { 0 };
        drafts.push(draft(&mut rng, topic, &concept, at, answers));
    }

    // Ids follow creation order, as in real dumps.
    let mut order: Vec<usize> = (0..drafts.len()).collect();
    order.sort_by_key(|&i| (drafts[i].created, i));
    let mut id_of = vec![0u64; drafts.len()];
    for (rank, &i) in order.iter().enumerate() {
        id_of[i] = rank as u64 + 1;
    }

    let mut posts = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n");
    let mut next_answer = 100_000u64;
    for &i in &order {
        let d = &drafts[i];
        let body = format!("<p>{}</p>", d.body.join(" "));
        let tags: String = d.tags.iter().map(|t| format!("<{t}>")).collect();
        writeln!(
            posts,
            "  <row Id=\"{}\" PostTypeId=\"1\" CreationDate=\"{}\" Title=\"{}\" Body=\"{}\" Tags=\"{}\" />",
            id_of[i],
            ts(d.created),
            escape(d.title.join(" ").as_str()),
            escape(body.as_str()),
            escape(tags.as_str()),
        )
        .unwrap();
        for a in 0..d.answers {
            next_answer += 1;
            writeln!(
                posts,
                "  <row Id=\"{next_answer}\" PostTypeId=\"2\" ParentId=\"{}\" CreationDate=\"{}\" Body=\"{}\" />",
                id_of[i],
                ts(d.created + Duration::hours(a as i64 + 1)),
                escape("<p>try this</p>"),
            )
            .unwrap();
        }
    }
    posts.push_str("</posts>\n");

    let mut links = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<postlinks>\n");
    let mut planted = Vec::new();
    let mut link_id = 0;
    for &(a, m, split, linked) in &pairs {
        link_id += 1;
        writeln!(
            links,
            "  <row Id=\"{link_id}\" CreationDate=\"{}\" PostId=\"{}\" RelatedPostId=\"{}\" LinkTypeId=\"3\" />",
            ts(linked),
            id_of[a],
            id_of[m]
        )
        .unwrap();
        planted.push(PlantedPair {
            anchor: id_of[a],
            master: id_of[m],
            split: split.to_string(),
            anchor_title: drafts[a].title.join(" "),
            anchor_body: drafts[a].body.join(" "),
            tags: drafts[a].tags.clone(),
        });
    }
    // A few related (non-duplicate) links, which ingestion must ignore.
    for _ in 0..5 {
        link_id += 1;
        let x = rng.random_range(1..=drafts.len() as u64);
        let y = rng.random_range(1..=drafts.len() as u64);
        writeln!(
            links,
            "  <row Id=\"{link_id}\" CreationDate=\"2015-01-01T00:00:00.000\" PostId=\"{x}\" RelatedPostId=\"{y}\" LinkTypeId=\"1\" />"
        )
        .unwrap();
    }
    links.push_str("</postlinks>\n");
    Ok(SynthDump { posts_xml: posts, links_xml: links, planted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{derive_pairs, parse_links, parse_posts, read_rows, split_pairs, Corpus, SplitBoundaries};

    #[test]
    fn parses_with_planted_pairs() {
        let cfg = SynthConfig::default();
        let dump = generate(&cfg).unwrap();
        let rows = |x: &str| read_rows(x.as_bytes()).collect::<Result<Vec<_>>>().unwrap();
        let posts = parse_posts(rows(&dump.posts_xml)).unwrap();
        assert_eq!(posts.questions.len(), cfg.questions);
        assert_eq!(posts.malformed_rows, 0);
        let corpus = Corpus::new(posts.questions);
        let links = parse_links(rows(&dump.links_xml), |id| corpus.contains(id));
        assert_eq!(links.links.len(), 30);
        let derived = derive_pairs(&links.links, &corpus);
        assert_eq!(derived.pairs.len(), 30);
        let split = split_pairs(&derived.pairs, &SplitBoundaries::default());
        assert_eq!((split.train.len(), split.validation.len(), split.test.len()), (20, 4, 6));
        for p in &dump.planted {
            assert!(derived.pairs.iter().any(|d| d.anchor == p.anchor && d.master == p.master));
            assert!(corpus.get(p.master).unwrap().is_answered());
        }
    }

    #[test]
    fn deterministic() {
        let a = generate(&SynthConfig::default()).unwrap();
        let b = generate(&SynthConfig::default()).unwrap();
        assert_eq!(a.posts_xml, b.posts_xml);
        assert_eq!(a.links_xml, b.links_xml);
    }
}
