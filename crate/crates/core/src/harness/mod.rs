//! Task orchestration: loads problems, builds the oracle, runs the chosen
//! task over a problem range and assembles the report.

pub mod config;
pub mod dataset;
pub mod report;

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{
    ChatBackend, Gateway, GatewayConfig, HttpBackend, Oracle, OracleError, OracleRequest, Purpose, RecordingBackend,
    ReplayBackend, ScriptedBackend,
};
use crate::retrieval::{RagIndex, RetrievalError};
use crate::seed;
use crate::verify::{self, BongardProblem, VerifyError};

pub use config::{BackendKind, ProblemRange, RunConfig, Task};
pub use dataset::{load_dataset, DatasetManifest, ManifestError, ProblemEntry};
pub use report::{emit_report, parse_records, render_records, render_table, ProblemOutcome, ProblemRecord, Report, RunMeta, Tally};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("dataset: {0}")]
    Manifest(#[from] ManifestError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("retrieval: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error("problem {problem}: {error}")]
    Verify { problem: u32, error: VerifyError },
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    fn from_verify(problem: u32, error: VerifyError) -> Self {
        match error {
            VerifyError::Oracle(e) => HarnessError::Oracle(e),
            error => HarnessError::Verify { problem, error },
        }
    }

    /// Oracle failure that ends the run (exhausted retries or a missing
    /// replay fixture).
    pub fn is_oracle_failure(&self) -> bool {
        matches!(self, HarnessError::Oracle(OracleError::Unavailable(_) | OracleError::MissingFixture { .. }))
    }
}

/// One scripted reply: the first rule whose purpose and substring filter
/// match the request answers it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(default)]
    pub purpose: Option<Purpose>,
    /// Substring required somewhere in the request's turn texts.
    #[serde(default)]
    pub contains: Option<String>,
    pub response: String,
}

/// Backend answering from an ordered rule list.
pub fn scripted_backend(rules: Vec<ScriptRule>) -> ScriptedBackend {
    ScriptedBackend::fallible(move |req: &OracleRequest| {
        let text: String = req.turns.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join("\n");
        rules
            .iter()
            .find(|r| {
                r.purpose.is_none_or(|p| p == req.purpose) && r.contains.as_ref().is_none_or(|c| text.contains(c.as_str()))
            })
            .map(|r| r.response.clone())
            .ok_or_else(|| OracleError::Unavailable(format!("script has no reply for a {:?} request", req.purpose)))
    })
}

pub fn load_script(path: &Path) -> Result<Vec<ScriptRule>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// Builds the oracle for the configured backend. Live runs record every
/// exchange into the cache directory; replay runs read from it.
pub fn build_oracle(cfg: &RunConfig, script: Option<Vec<ScriptRule>>) -> Result<Oracle, HarnessError> {
    let need_cache = || cfg.cache.clone().ok_or_else(|| HarnessError::Config(format!("the {} backend needs a cache directory", cfg.backend)));
    let (backend, gateway): (Arc<dyn ChatBackend>, GatewayConfig) = match cfg.backend {
        BackendKind::Live => {
            let live = RecordingBackend::new(HttpBackend::from_env()?, &need_cache()?)?;
            let gw = GatewayConfig {
                max_in_flight: cfg.max_in_flight,
                requests_per_second: Some(cfg.requests_per_second),
                ..GatewayConfig::live()
            };
            (Arc::new(live), gw)
        }
        BackendKind::Replay => (Arc::new(ReplayBackend::open(&need_cache()?)?), GatewayConfig::unlimited()),
        BackendKind::Scripted => {
            let rules = script.ok_or_else(|| HarnessError::Config("the scripted backend needs a script".into()))?;
            let b = scripted_backend(rules);
            match &cfg.cache {
                Some(dir) => (Arc::new(RecordingBackend::new(b, dir)?), GatewayConfig::unlimited()),
                None => (Arc::new(b), GatewayConfig::unlimited()),
            }
        }
    };
    Ok(Oracle::new(Gateway::new(backend, gateway), cfg.temperatures()))
}

/// Lowercased words of a rule, for comparing emitted and true rules.
pub fn normalise_rule(rule: &str) -> String {
    rule.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn rule_matches(emitted: &str, truth: Option<&str>) -> bool {
    truth.is_some_and(|t| normalise_rule(emitted) == normalise_rule(t))
}

fn run_problem(
    cfg: &RunConfig,
    manifest: &DatasetManifest,
    entry: &ProblemEntry,
    oracle: &Oracle,
    index: Option<&RagIndex>,
) -> Result<ProblemRecord, HarnessError> {
    let problem: BongardProblem = manifest.load_problem(entry, cfg.binarize_threshold)?;
    let vcfg = cfg.verify_config();
    let pseed = seed::split(cfg.seed, entry.id as u64);
    let wrap = |e| HarnessError::from_verify(entry.id, e);
    let outcome = match cfg.task {
        Task::Verify => ProblemOutcome::Verification(
            verify::run_verification_task(&problem, oracle, index, &vcfg, cfg.seed).map_err(wrap)?,
        ),
        Task::Invert => ProblemOutcome::Verification(
            verify::run_inversion_task(&problem, oracle, index, &vcfg, cfg.seed).map_err(wrap)?,
        ),
        Task::Solve => {
            let curriculum: Vec<(u32, String)> = manifest
                .problems
                .iter()
                .filter(|p| p.id < entry.id)
                .filter_map(|p| p.rule_pos.clone().map(|r| (p.id, r)))
                .collect();
            match verify::solve_problem(&problem, &curriculum, oracle, index, &vcfg, pseed) {
                Ok(ranked) => {
                    let top = ranked[0].rule.clone();
                    let solved = rule_matches(&top, entry.rule_pos.as_deref());
                    ProblemOutcome::Solution { ranked, top, solved }
                }
                Err(VerifyError::NoHypotheses) => {
                    log::warn!("problem {}: no hypotheses", entry.id);
                    ProblemOutcome::Solution { ranked: Vec::new(), top: String::new(), solved: false }
                }
                Err(e) => return Err(wrap(e)),
            }
        }
        Task::Eval => {
            let rule = match oracle.baseline_solution(problem.shots(), pseed) {
                Ok(r) => r,
                Err(OracleError::NoHypotheses) => String::new(),
                Err(e) => return Err(e.into()),
            };
            let solved = rule_matches(&rule, entry.rule_pos.as_deref());
            ProblemOutcome::Baseline { rule, solved }
        }
    };
    Ok(ProblemRecord { id: entry.id, category: entry.category, outcome })
}

/// Runs the configured task over every manifest problem in range.
pub fn run(
    cfg: &RunConfig,
    manifest: &DatasetManifest,
    oracle: &Oracle,
    index: Option<&RagIndex>,
) -> Result<Report, HarnessError> {
    cfg.check().map_err(HarnessError::Config)?;
    let range = cfg.effective_range();
    let selected: Vec<&ProblemEntry> =
        manifest.problems.iter().filter(|p| range.is_none_or(|r| r.contains(p.id))).collect();
    if selected.is_empty() {
        return Err(HarnessError::Config("no problems in the selected range".into()));
    }
    if matches!(cfg.task, Task::Verify | Task::Invert) {
        if let Some(p) = selected.iter().find(|p| p.rule_pos.is_none()) {
            return Err(ManifestError { problem: Some(p.id), index: None, message: "missing ground-truth rule".into() }.into());
        }
    }
    let job = |e: &&ProblemEntry| run_problem(cfg, manifest, e, oracle, index);
    let problems: Vec<ProblemRecord> = if cfg.parallel {
        selected.par_iter().map(job).collect::<Result<_, _>>()?
    } else {
        selected.iter().map(job).collect::<Result<_, _>>()?
    };
    let meta = RunMeta {
        task: cfg.task,
        seed: cfg.seed,
        backend: cfg.backend,
        config_digest: cfg.digest(),
        embedder: index.map(RagIndex::embedder_id),
    };
    Ok(Report::new(meta, problems))
}
