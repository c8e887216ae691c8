//! Dataset discovery and validation.
//!
//! Two layouts are accepted:
//! * `manifest.json` at the root: `{"problems": [{"id", "positives",
//!   "negatives", "rule_pos"?, "rule_neg"?, "category"?}]}` with image paths
//!   relative to the root;
//! * one directory per problem (`<id>` or `BP_<id>`) holding panels
//!   `0..=5` (positive) and `6..=11` (negative) as `.png` or `.pgm`, plus
//!   optional `rule_pos.txt`, `rule_neg.txt` and `category.txt`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::io::load_panel;
use crate::verify::{BongardProblem, Category, SIDE};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{}{message}", .problem.map(|p| format!("problem {p}: ")).unwrap_or_default(), .index.map(|i| format!("panel {i}: ")).unwrap_or_default())]
pub struct ManifestError {
    pub problem: Option<u32>,
    pub index: Option<usize>,
    pub message: String,
}

impl ManifestError {
    fn new(problem: Option<u32>, index: Option<usize>, message: impl Into<String>) -> Self {
        Self { problem, index, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemEntry {
    pub id: u32,
    pub positives: Vec<PathBuf>,
    pub negatives: Vec<PathBuf>,
    #[serde(default)]
    pub rule_pos: Option<String>,
    #[serde(default)]
    pub rule_neg: Option<String>,
    #[serde(default)]
    pub category: Option<Category>,
}

impl ProblemEntry {
    pub fn panels(&self) -> impl Iterator<Item = &PathBuf> {
        self.positives.iter().chain(&self.negatives)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub problems: Vec<ProblemEntry>,
}

#[derive(Deserialize)]
struct ManifestFile {
    problems: Vec<ProblemEntry>,
}

impl DatasetManifest {
    pub fn get(&self, id: u32) -> Option<&ProblemEntry> {
        self.problems.iter().find(|p| p.id == id)
    }

    /// Rasterizes one problem's panels.
    pub fn load_problem(&self, entry: &ProblemEntry, threshold: u8) -> Result<BongardProblem, ManifestError> {
        let load = |paths: &[PathBuf], offset: usize| {
            paths
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    load_panel(p, threshold)
                        .map_err(|e| ManifestError::new(Some(entry.id), Some(offset + i), format!("{}: {e}", p.display())))
                })
                .collect::<Result<Vec<_>, _>>()
        };
        BongardProblem::new(
            entry.id,
            load(&entry.positives, 0)?,
            load(&entry.negatives, SIDE)?,
            entry.rule_pos.clone(),
            entry.rule_neg.clone(),
            entry.category,
        )
        .map_err(|e| ManifestError::new(Some(entry.id), None, e.to_string()))
    }
}

fn read_optional(path: &Path) -> Option<String> {
    fs::read_to_string(path).ok().map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

fn problem_dir_id(name: &str) -> Option<u32> {
    let digits = name.strip_prefix("BP_").or_else(|| name.strip_prefix("bp_")).unwrap_or(name);
    digits.parse().ok()
}

fn panel_path(dir: &Path, index: usize) -> Option<PathBuf> {
    ["png", "pgm"].iter().map(|ext| dir.join(format!("{index}.{ext}"))).find(|p| p.is_file())
}

fn scan_directories(root: &Path) -> Result<Vec<ProblemEntry>, ManifestError> {
    let read = fs::read_dir(root).map_err(|e| ManifestError::new(None, None, format!("{}: {e}", root.display())))?;
    let mut dirs: Vec<(u32, PathBuf)> = read
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| problem_dir_id(&e.file_name().to_string_lossy()).map(|id| (id, e.path())))
        .collect();
    dirs.sort();
    let mut problems = Vec::new();
    for (id, dir) in dirs {
        let mut panels = Vec::new();
        for i in 0..2 * SIDE {
            panels.push(panel_path(&dir, i).ok_or_else(|| {
                ManifestError::new(Some(id), Some(i), format!("missing panel image in {}", dir.display()))
            })?);
        }
        let category = match read_optional(&dir.join("category.txt")) {
            Some(c) => Some(c.parse().map_err(|e: String| ManifestError::new(Some(id), None, e))?),
            None => None,
        };
        let negatives = panels.split_off(SIDE);
        problems.push(ProblemEntry {
            id,
            positives: panels,
            negatives,
            rule_pos: read_optional(&dir.join("rule_pos.txt")),
            rule_neg: read_optional(&dir.join("rule_neg.txt")),
            category,
        });
    }
    Ok(problems)
}

/// Reads and validates a dataset root.
pub fn load_dataset(root: &Path) -> Result<DatasetManifest, ManifestError> {
    if !root.is_dir() {
        return Err(ManifestError::new(None, None, format!("{} is not a directory", root.display())));
    }
    let manifest_path = root.join("manifest.json");
    let mut problems = if manifest_path.is_file() {
        let text = fs::read_to_string(&manifest_path)
            .map_err(|e| ManifestError::new(None, None, format!("{}: {e}", manifest_path.display())))?;
        let file: ManifestFile = serde_json::from_str(&text)
            .map_err(|e| ManifestError::new(None, None, format!("{}: {e}", manifest_path.display())))?;
        file.problems
    } else {
        scan_directories(root)?
    };
    if problems.is_empty() {
        return Err(ManifestError::new(None, None, format!("no problems found under {}", root.display())));
    }
    let mut prev = None;
    for p in &mut problems {
        if prev.is_some_and(|q| p.id <= q) {
            return Err(ManifestError::new(Some(p.id), None, "problem ids must be strictly increasing"));
        }
        prev = Some(p.id);
        for (side, list) in [("positive", &mut p.positives), ("negative", &mut p.negatives)] {
            if list.len() != SIDE {
                let offset = if side == "positive" { 0 } else { SIDE };
                return Err(ManifestError::new(
                    Some(p.id),
                    Some(offset + list.len().min(SIDE)),
                    format!("expected {SIDE} {side} panels, found {}", list.len()),
                ));
            }
            for path in list.iter_mut() {
                if path.is_relative() {
                    *path = root.join(&*path);
                }
            }
        }
        for (i, path) in p.panels().enumerate() {
            if !path.is_file() {
                return Err(ManifestError::new(Some(p.id), Some(i), format!("missing file {}", path.display())));
            }
        }
        for rule in [&mut p.rule_pos, &mut p.rule_neg] {
            *rule = rule.take().map(|r| r.trim().to_string()).filter(|r| !r.is_empty());
        }
    }
    Ok(DatasetManifest { root: root.to_path_buf(), problems })
}
