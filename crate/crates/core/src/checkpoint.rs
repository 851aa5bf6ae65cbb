//! Shared text layout for model checkpoints: a `magic key=value ...`
//! header followed by whitespace-separated float rows.

use std::io::Write;

use crate::error::{Error, Result};

pub fn write_floats<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b" ")?;
        }
        write!(w, "{v}")?;
        first = false;
    }
    w.write_all(b"\n")
}

pub fn parse_floats(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::format(lineno, format!("bad number {s:?}")))
        })
        .collect()
}

pub fn parse_header(line: &str, magic: &str) -> Result<Vec<(String, String)>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(magic) {
        return Err(Error::format(1, format!("expected `{magic}` header")));
    }
    parts
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::format(1, format!("bad header field {kv:?}")))
        })
        .collect()
}

/// Parsed `key=value` header fields.
#[derive(Debug, Clone)]
pub struct Header(Vec<(String, String)>);

impl Header {
    pub fn parse(line: &str, magic: &str) -> Result<Self> {
        parse_header(line, magic).map(Header)
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::format(1, format!("header missing {key}")))
    }

    pub fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::format(1, format!("bad header value for {key}")))
    }
}

/// Header plus the remaining non-blank lines with their 1-based numbers.
pub fn read_checkpoint(path: &std::path::Path, magic: &str) -> Result<(Header, Vec<(usize, String)>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| Error::format(1, "empty checkpoint"))?;
    let header = Header::parse(first, magic)?;
    let body = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect();
    Ok((header, body))
}
