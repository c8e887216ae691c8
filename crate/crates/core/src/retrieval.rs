//! Example-program index: retrieves the corpus program whose rule text is
//! most similar to a proposed rule.
//!
//! Corpus layout: `manifest` (one `id<TAB>rule` line per entry) plus
//! `<id>/rule.txt` and `<id>/program.bpdsl` for every listed id.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dsl::{compile, format_diagnostics, ClassifierProgram};

/// Hash buckets of the default embedder.
pub const BUCKETS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrievalError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("corpus rejected:\n{}", render_failures(.0))]
    CorpusParse(Vec<(PathBuf, String)>),
}

fn render_failures(f: &[(PathBuf, String)]) -> String {
    f.iter().map(|(p, m)| format!("  {}: {m}", p.display())).collect::<Vec<_>>().join("\n")
}

/// Text-to-vector map used for similarity search.
pub trait Embedder: Send + Sync {
    /// Identifies the embedder (and its fitted state) in reports.
    fn id(&self) -> String;
    /// L2-normalised embedding of nonempty text.
    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError>;
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Lowercases, collapses every run of non-alphanumerics to one space and pads
/// with a space on each side.
fn normalise(text: &str) -> String {
    let mut out = String::from(" ");
    for word in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
    {
        out.push_str(&word.to_lowercase());
        out.push(' ');
    }
    out
}

fn trigram_buckets(text: &str) -> Vec<usize> {
    let chars: Vec<char> = normalise(text).chars().collect();
    chars
        .windows(3)
        .map(|w| {
            let g: String = w.iter().collect();
            (fnv1a(g.as_bytes()) % BUCKETS as u64) as usize
        })
        .collect()
}

/// Character 3-gram hashed TF-IDF with smoothed IDF fitted on a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct HashedTfIdf {
    idf: Vec<f64>,
    docs: usize,
}

impl HashedTfIdf {
    pub fn fit<S: AsRef<str>>(corpus: &[S]) -> Self {
        let mut df = vec![0usize; BUCKETS];
        for doc in corpus {
            let mut seen = trigram_buckets(doc.as_ref());
            seen.sort_unstable();
            seen.dedup();
            for b in seen {
                df[b] += 1;
            }
        }
        let n = corpus.len() as f64;
        let idf = df.iter().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
        Self { idf, docs: corpus.len() }
    }
}

impl Embedder for HashedTfIdf {
    fn id(&self) -> String {
        format!("char3-tfidf-fnv{BUCKETS}-n{}", self.docs)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        if normalise(text).trim().is_empty() {
            return Err(RetrievalError::InvalidInput("cannot embed empty text".into()));
        }
        let mut v = vec![0.0; BUCKETS];
        for b in trigram_buckets(text) {
            v[b] += 1.0;
        }
        for (x, w) in v.iter_mut().zip(&self.idf) {
            *x *= w;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        Ok(v)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleEntry {
    pub problem_id: u32,
    pub rule: String,
    pub program: ClassifierProgram,
}

impl ExampleEntry {
    pub fn program_source(&self) -> &str {
        self.program.source()
    }
}

/// Immutable similarity index over corpus entries (sorted by problem id).
pub struct RagIndex {
    entries: Vec<ExampleEntry>,
    vectors: Vec<Vec<f64>>,
    embedder: Box<dyn Embedder>,
}

impl std::fmt::Debug for RagIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RagIndex")
            .field("entries", &self.entries.len())
            .field("embedder", &self.embedder.id())
            .finish()
    }
}

impl RagIndex {
    /// Indexes entries with the default embedder fitted on their rules.
    pub fn new(entries: Vec<ExampleEntry>) -> Result<Self, RetrievalError> {
        let rules: Vec<&str> = entries.iter().map(|e| e.rule.as_str()).collect();
        let embedder = HashedTfIdf::fit(&rules);
        Self::with_embedder(entries, Box::new(embedder))
    }

    pub fn with_embedder(
        mut entries: Vec<ExampleEntry>,
        embedder: Box<dyn Embedder>,
    ) -> Result<Self, RetrievalError> {
        if entries.is_empty() {
            return Err(RetrievalError::InvalidInput("index needs at least one entry".into()));
        }
        entries.sort_by_key(|e| e.problem_id);
        let vectors = entries.iter().map(|e| embedder.embed(&e.rule)).collect::<Result<_, _>>()?;
        Ok(Self { entries, vectors, embedder })
    }

    pub fn entries(&self) -> &[ExampleEntry] {
        &self.entries
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn embedder_id(&self) -> String {
        self.embedder.id()
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        self.embedder.embed(text)
    }

    /// Cosine similarity of `rule` to every entry, in entry order. Text
    /// that embeds to nothing scores 0 everywhere.
    pub fn similarities(&self, rule: &str) -> Vec<f64> {
        match self.embedder.embed(rule) {
            Ok(q) => self.vectors.iter().map(|v| cosine(&q, v)).collect(),
            Err(_) => vec![0.0; self.entries.len()],
        }
    }

    /// Entry with the highest cosine similarity; ties go to the lowest id.
    pub fn retrieve_nearest(&self, rule: &str) -> &ExampleEntry {
        let sims = self.similarities(rule);
        let best = (0..sims.len()).fold(0, |bi, i| if sims[i] > sims[bi] { i } else { bi });
        &self.entries[best]
    }
}

/// Reads, parses and validates the whole corpus, reporting every bad file.
pub fn build_index(corpus_dir: &Path) -> Result<RagIndex, RetrievalError> {
    RagIndex::new(load_corpus(corpus_dir)?)
}

pub fn load_corpus(corpus_dir: &Path) -> Result<Vec<ExampleEntry>, RetrievalError> {
    let manifest_path = corpus_dir.join("manifest");
    let manifest = fs::read_to_string(&manifest_path).map_err(|e| {
        RetrievalError::CorpusParse(vec![(manifest_path.clone(), format!("cannot read manifest: {e}"))])
    })?;
    let mut failures = Vec::new();
    let mut entries = Vec::new();
    for (lineno, line) in manifest.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((id, rule)) = line.split_once('\t') else {
            failures.push((manifest_path.clone(), format!("line {}: expected `id<TAB>rule`", lineno + 1)));
            continue;
        };
        let Ok(problem_id) = id.trim().parse::<u32>() else {
            failures.push((manifest_path.clone(), format!("line {}: bad id `{id}`", lineno + 1)));
            continue;
        };
        let rule = rule.trim().to_string();
        let dir = corpus_dir.join(id.trim());
        let rule_path = dir.join("rule.txt");
        match fs::read_to_string(&rule_path) {
            Ok(text) if text.trim() == rule && !rule.is_empty() => {}
            Ok(text) => failures.push((
                rule_path.clone(),
                format!("rule `{}` does not match manifest rule `{rule}`", text.trim()),
            )),
            Err(e) => failures.push((rule_path.clone(), e.to_string())),
        }
        let prog_path = dir.join("program.bpdsl");
        match fs::read_to_string(&prog_path) {
            Ok(src) => match compile(&src) {
                Ok(program) => entries.push(ExampleEntry { problem_id, rule, program }),
                Err(d) => failures.push((prog_path, format_diagnostics(&d))),
            },
            Err(e) => failures.push((prog_path, e.to_string())),
        }
    }
    if entries.is_empty() && failures.is_empty() {
        failures.push((manifest_path, "manifest lists no entries".into()));
    }
    if failures.is_empty() {
        Ok(entries)
    } else {
        Err(RetrievalError::CorpusParse(failures))
    }
}
