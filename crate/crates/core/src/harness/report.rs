//! Run reports: per-problem records, aggregate and per-category accuracy,
//! rendered as a text table and as JSON lines. Rendering is byte-stable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::verify::{Category, RankedRule, VerificationOutcome};

use super::config::{BackendKind, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemOutcome {
    Verification(VerificationOutcome),
    Solution { ranked: Vec<RankedRule>, top: String, solved: bool },
    Baseline { rule: String, solved: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub id: u32,
    pub category: Option<Category>,
    pub outcome: ProblemOutcome,
}

impl ProblemRecord {
    /// Credited and attempted units: test panels for verification, one
    /// problem for solution-style tasks.
    pub fn tally(&self) -> (usize, usize) {
        match &self.outcome {
            ProblemOutcome::Verification(v) => (v.correct, v.evaluated),
            ProblemOutcome::Solution { solved, .. } | ProblemOutcome::Baseline { solved, .. } => {
                (usize::from(*solved), 1)
            }
        }
    }

    pub fn aborted_folds(&self) -> usize {
        match &self.outcome {
            ProblemOutcome::Verification(v) => v.aborted(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub task: Task,
    pub seed: u64,
    pub backend: BackendKind,
    pub config_digest: String,
    pub embedder: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub evaluated: usize,
}

impl Tally {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a ProblemRecord>) -> Self {
        records.into_iter().fold(Self { correct: 0, evaluated: 0 }, |t, r| {
            let (c, e) = r.tally();
            Self { correct: t.correct + c, evaluated: t.evaluated + e }
        })
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.evaluated > 0).then(|| self.correct as f64 / self.evaluated as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: Category,
    pub problems: usize,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: RunMeta,
    pub problems: Vec<ProblemRecord>,
    pub aggregate: Tally,
    pub categories: Vec<CategoryRow>,
}

impl Report {
    pub fn new(meta: RunMeta, problems: Vec<ProblemRecord>) -> Self {
        let aggregate = Tally::of(&problems);
        let mut groups: BTreeMap<Category, Vec<&ProblemRecord>> = BTreeMap::new();
        for p in &problems {
            if let Some(c) = p.category {
                groups.entry(c).or_default().push(p);
            }
        }
        let categories = groups
            .into_iter()
            .map(|(category, rs)| CategoryRow { category, problems: rs.len(), tally: Tally::of(rs) })
            .collect();
        Self { meta, problems, aggregate, categories }
    }

    /// Number of problems whose emitted rule matched the ground truth.
    pub fn solved(&self) -> Option<usize> {
        matches!(self.meta.task, Task::Solve | Task::Eval).then_some(self.aggregate.correct)
    }
}

/// Up to four decimals, trailing zeros trimmed but at least two kept.
pub fn fmt_ratio(x: f64) -> String {
    let s = format!("{x:.4}");
    let trimmed = s.trim_end_matches('0');
    let decimals = trimmed.split_once('.').map_or(0, |(_, d)| d.len());
    if decimals >= 2 {
        trimmed.to_string()
    } else {
        format!("{x:.2}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_ratio).unwrap_or_else(|| "n/a".into())
}

pub fn render_table(r: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("task {}\n", r.meta.task));
    out.push_str(&format!("seed {}\n", r.meta.seed));
    out.push_str(&format!("backend {}\n", r.meta.backend));
    out.push_str(&format!("config {}\n", r.meta.config_digest));
    if let Some(e) = &r.meta.embedder {
        out.push_str(&format!("embedder {e}\n"));
    }
    out.push_str(&format!("problems {}\n", r.problems.len()));
    let aborted: usize = r.problems.iter().map(ProblemRecord::aborted_folds).sum();
    out.push_str(&format!("aborted_folds {aborted}\n"));
    if let Some(s) = r.solved() {
        out.push_str(&format!("solved {s}/{}\n", r.problems.len()));
    }
    out.push_str(&format!(
        "accuracy {} ({}/{})\n",
        fmt_opt(r.aggregate.accuracy()),
        r.aggregate.correct,
        r.aggregate.evaluated
    ));
    out.push_str("\ncategory accuracy\n");
    for row in &r.categories {
        out.push_str(&format!("{} {}\n", row.category, fmt_opt(row.tally.accuracy())));
    }
    out.push_str("\nproblem result\n");
    for p in &r.problems {
        let (c, e) = p.tally();
        let detail = match &p.outcome {
            ProblemOutcome::Verification(_) => format!("{c}/{e}"),
            ProblemOutcome::Solution { top, solved, .. } | ProblemOutcome::Baseline { rule: top, solved } => {
                format!("{} \"{top}\"", if *solved { "solved" } else { "unsolved" })
            }
        };
        out.push_str(&format!("{} {detail}\n", p.id));
    }
    out
}

pub fn render_records(r: &Report) -> String {
    let mut out = String::new();
    for p in &r.problems {
        out.push_str(&serde_json::to_string(p).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<ProblemRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// Writes `report.txt`, `records.jsonl` and `report.json` into `dir`.
pub fn emit_report(r: &Report, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let files = [
        ("report.txt", render_table(r)),
        ("records.jsonl", render_records(r)),
        ("report.json", serde_json::to_string_pretty(r).expect("report serializes") + "\n"),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_format() {
        assert_eq!(fmt_ratio(0.75), "0.75");
        assert_eq!(fmt_ratio(1.0), "1.00");
        assert_eq!(fmt_ratio(11.0 / 12.0), "0.9167");
        assert_eq!(fmt_ratio(0.5), "0.50");
        assert_eq!(fmt_ratio(0.125), "0.125");
    }
}
