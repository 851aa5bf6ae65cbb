#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

pub fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic.json")
}

/// A synthetic dump plus a workspace under one temp dir.
pub struct Pipeline {
    pub dir: tempfile::TempDir,
    pub threads: usize,
}

impl Pipeline {
    pub fn new(threads: usize) -> Self {
        let p = Self { dir: tempfile::tempdir().unwrap(), threads };
        p.run(&["synth", "--out", p.data().to_str().unwrap()]).unwrap();
        p
    }

    pub fn data(&self) -> PathBuf {
        self.dir.path().join("data")
    }

    pub fn work(&self) -> PathBuf {
        self.dir.path().join("work")
    }

    /// Runs one command in-process with the fixture config.
    pub fn run(&self, args: &[&str]) -> anyhow::Result<()> {
        let mut argv: Vec<String> = vec!["dupq".into()];
        argv.extend(args.iter().map(|s| s.to_string()));
        argv.extend([
            "--config".into(),
            fixture_config().display().to_string(),
            "--work-dir".into(),
            self.work().display().to_string(),
            "--threads".into(),
            self.threads.to_string(),
        ]);
        dupq_cli::run(argv)
    }

    pub fn ingest(&self) -> anyhow::Result<()> {
        let (posts, links) = (self.data().join("Posts.xml"), self.data().join("PostLinks.xml"));
        self.run(&["ingest", "--posts", posts.to_str().unwrap(), "--links", links.to_str().unwrap()])
    }

    /// ingest through train-retrieval.
    pub fn through_retrieval(&self) -> anyhow::Result<()> {
        self.ingest()?;
        for cmd in ["build-graph", "train-embeddings", "build-candidates", "train-retrieval"] {
            self.run(&[cmd])?;
        }
        Ok(())
    }

    pub fn json(&self, rel: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.work().join(rel)).unwrap()).unwrap()
    }

    pub fn bytes(&self, rel: &str) -> Vec<u8> {
        fs::read(self.work().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
    }

    pub fn planted(&self) -> Value {
        serde_json::from_str(&fs::read_to_string(self.data().join("planted.json")).unwrap()).unwrap()
    }
}
