//! Text preprocessing for question titles and bodies.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;

static STOPWORDS_RAW: &str = include_str!("../../data/stopwords_en.txt");

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    STOPWORDS_RAW
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .collect()
});

static MARKUP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>").unwrap());

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:https?|ftp)://\S+|\bwww\.\S+").unwrap());

/// True if `word` (already lowercased) is in the shipped stopword list.
pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(word)
}

fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    text.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&apos;", "'")
        .replace("&nbsp;", " ")
        .replace("&amp;", "&")
}

/// Strip markup and URLs, lowercase, split on anything that is not
/// alphanumeric, and drop stopwords.
///
/// The output re-joined with spaces maps to itself.
pub fn preprocess_text(raw: &str) -> Vec<String> {
    let no_markup = MARKUP.replace_all(raw, " ");
    // Entities are decoded after markup removal so escaped code like
    // `&lt;stdio.h&gt;` keeps its text.
    let decoded = decode_entities(&no_markup);
    let no_urls = URL.replace_all(&decoded, " ");
    no_urls
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !is_stopword(t))
        .map(str::to_string)
        .collect()
}
