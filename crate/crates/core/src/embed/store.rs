use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense vectors keyed by string id, all of one dimension.
///
/// Iteration and file order follow insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dimension: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingStore {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(Self {
            dimension,
            ids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Insert or overwrite a vector.
    pub fn insert(&mut self, id: impl Into<String>, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite embedding component".into()));
        }
        let id = id.into();
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("invalid embedding id {id:?}")));
        }
        match self.index.get(&id) {
            Some(&row) => {
                self.data[row * self.dimension..(row + 1) * self.dimension].copy_from_slice(vector)
            }
            None => {
                self.index.insert(id.clone(), self.ids.len());
                self.ids.push(id);
                self.data.extend_from_slice(vector);
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index
            .get(id)
            .map(|&row| &self.data[row * self.dimension..(row + 1) * self.dimension])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .zip(self.data.chunks_exact(self.dimension))
            .map(|(id, v)| (id.as_str(), v))
    }

    /// Text format: `<count> <dimension>` header, then `<id> <v1> ... <vD>`
    /// per line.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{} {}", self.len(), self.dimension).map_err(io)?;
        for (id, v) in self.iter() {
            w.write_all(id.as_bytes()).map_err(io)?;
            for x in v {
                write!(w, " {x}").map_err(io)?;
            }
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file)).map_err(|e| match e {
            Error::Format { line, message } => Error::Format {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(1, "missing header"))?;
        let header = header.map_err(|e| Error::format(1, e.to_string()))?;
        let mut parts = header.split_whitespace();
        let parse_usize = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
        let (Some(count), Some(dimension), None) =
            (parse_usize(parts.next()), parse_usize(parts.next()), parts.next())
        else {
            return Err(Error::format(1, "header must be `<count> <dimension>`"));
        };
        let mut store = Self::new(dimension).map_err(|_| Error::format(1, "dimension must be positive"))?;
        let mut row = vec![0.0; dimension];
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::format(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let id = fields.next().ok_or_else(|| Error::format(lineno, "missing id"))?;
            let mut n = 0;
            for f in fields {
                if n == dimension {
                    return Err(Error::format(
                        lineno,
                        format!("more than {dimension} components for {id:?}"),
                    ));
                }
                row[n] = f
                    .parse()
                    .map_err(|_| Error::format(lineno, format!("bad number {f:?}")))?;
                n += 1;
            }
            if n != dimension {
                return Err(Error::format(
                    lineno,
                    format!("expected {dimension} components for {id:?}, found {n}"),
                ));
            }
            if store.contains(id) {
                return Err(Error::format(lineno, format!("duplicate id {id:?}")));
            }
            store
                .insert(id, &row)
                .map_err(|e| Error::format(lineno, e.to_string()))?;
        }
        if store.len() != count {
            return Err(Error::format(
                1,
                format!("header declares {count} vectors, file has {}", store.len()),
            ));
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_declared_format() {
        let store = EmbeddingStore::read("2 3\nq1 1 0 0\nq2 0 1 0\n".as_bytes()).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.dimension(), 3);
        assert_eq!(store.get("q2"), Some(&[0.0, 1.0, 0.0][..]));
    }

    #[test]
    fn short_vector_reports_line() {
        let err = EmbeddingStore::read("2 3\nq1 1 0 0\nq2 0 1\n".as_bytes()).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_is_error() {
        assert!(EmbeddingStore::read("3 1\na 1\n".as_bytes()).is_err());
        assert!(EmbeddingStore::read("1 0\n".as_bytes()).is_err());
    }

    #[test]
    fn rejects_wrong_dimension_insert() {
        let mut s = EmbeddingStore::new(2).unwrap();
        assert!(matches!(
            s.insert("a", &[1.0]),
            Err(Error::Dimension { expected: 2, actual: 1 })
        ));
        assert!(s.insert("a", &[f64::NAN, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn save_load_identity(rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 4), 1..20)) {
            let mut s = EmbeddingStore::new(4).unwrap();
            for (i, r) in rows.iter().enumerate() {
                s.insert(format!("id{i}#title"), r).unwrap();
            }
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("s.vec");
            s.save(&path).unwrap();
            prop_assert_eq!(EmbeddingStore::load(&path).unwrap(), s);
        }
    }
}
