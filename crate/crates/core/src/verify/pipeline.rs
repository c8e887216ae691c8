//! Oracle-driven pipelines: one fold (synthesize → fit → repair → vote or
//! fall back), the six-fold verification task, its inversion, and rule
//! scoring/ranking for the solution task.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsl::{compile, format_diagnostics, Label};
use crate::optimize::optimize_params;
use crate::oracle::{prompts, FailureReport, Oracle, OracleError};
use crate::retrieval::RagIndex;
use crate::seed;

use super::{
    accepted_indices, classify_by_majority, score_details, BongardProblem, CandidateRecord, Fold, VerifyConfig,
    VerifyError, SIDE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldPath {
    Programs,
    Fallback,
}

/// What happened on one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub holdout: usize,
    pub path: FoldPath,
    /// Labels for the held-out positive and negative panel.
    pub predictions: [Label; 2],
    pub correct: usize,
    pub candidates: usize,
    pub accepted: usize,
    pub repairs: usize,
    pub best_train_score: Option<f64>,
    /// Test panels decided by the oracle because the vote tied.
    pub tie_breaks: usize,
    /// Oracle labels that named neither class (counted as NEGATIVE).
    pub ambiguous: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FoldOutcome {
    Completed(FoldResult),
    Aborted { holdout: usize, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationOutcome {
    pub problem_id: u32,
    pub folds: Vec<FoldOutcome>,
    pub correct: usize,
    /// Test panels of completed folds.
    pub evaluated: usize,
}

impl VerificationOutcome {
    fn from_folds(problem_id: u32, folds: Vec<FoldOutcome>) -> Self {
        let done = folds.iter().filter_map(|f| match f {
            FoldOutcome::Completed(r) => Some(r),
            FoldOutcome::Aborted { .. } => None,
        });
        let (correct, evaluated) = done.fold((0, 0), |(c, e), r| (c + r.correct, e + 2));
        Self { problem_id, folds, correct, evaluated }
    }

    /// Correct predictions over evaluated test panels; `None` if every fold
    /// was aborted.
    pub fn accuracy(&self) -> Option<f64> {
        (self.evaluated > 0).then(|| self.correct as f64 / self.evaluated as f64)
    }

    pub fn aborted(&self) -> usize {
        self.folds.iter().filter(|f| matches!(f, FoldOutcome::Aborted { .. })).count()
    }
}

/// Internal result of one pipeline run.
struct FoldRun {
    result: FoldResult,
    records: Vec<CandidateRecord>,
    accepted: Vec<usize>,
}

fn fit(source: &str, fold: &Fold, cfg: &VerifyConfig, seed: u64, repaired: bool) -> Option<CandidateRecord> {
    let program = match compile(source) {
        Ok(p) => p,
        Err(d) => {
            log::warn!("dropping program: {}", format_diagnostics(&d).replace('\n', "; "));
            return None;
        }
    };
    let opt = match optimize_params(&program, &fold.train, cfg.budget, seed) {
        Ok(o) => o,
        Err(e) => {
            log::warn!("cannot fit program: {e}");
            return None;
        }
    };
    let details = score_details(&program, &opt.bindings, &fold.train).ok()?;
    Some(CandidateRecord {
        program,
        bindings: opt.bindings,
        train_score: details.score(),
        details,
        repaired,
        opt_trace: opt.trace,
    })
}

fn fit_all(sources: &[String], fold: &Fold, cfg: &VerifyConfig, seeds: impl Fn(usize) -> u64 + Sync, repaired: bool) -> Vec<CandidateRecord> {
    let job = |(i, s): (usize, &String)| fit(s, fold, cfg, seeds(i), repaired);
    if cfg.parallel {
        sources.par_iter().enumerate().filter_map(job).collect()
    } else {
        sources.iter().enumerate().filter_map(job).collect()
    }
}

/// Oracle label, with an unreadable answer mapped to NEGATIVE.
fn transduce(
    oracle: &Oracle,
    fold: &Fold,
    test: &crate::oracle::Attachment,
    rules: (&str, &str),
    seed: u64,
    ambiguous: &mut usize,
) -> Result<Label, OracleError> {
    match oracle.transduce_label(fold.shots(), test, rules.0, rules.1, seed) {
        Err(OracleError::AmbiguousLabel) => {
            log::warn!("oracle label unreadable; using NEGATIVE");
            *ambiguous += 1;
            Ok(Label::Negative)
        }
        other => other,
    }
}

fn pipeline(
    rules: (&str, &str),
    fold: &Fold,
    oracle: &Oracle,
    index: Option<&RagIndex>,
    cfg: &VerifyConfig,
    fold_seed: u64,
) -> Result<FoldRun, OracleError> {
    let (rule_pos, rule_neg) = rules;
    let stubs = oracle.suggest_method_stubs(rule_pos, seed::split(fold_seed, 0))?;
    let example = index.map(|ix| ix.retrieve_nearest(rule_pos));
    let sources =
        oracle.synthesize_programs(rule_pos, rule_neg, fold.shots(), &stubs, example, cfg.n_programs, seed::split(fold_seed, 1))?;
    let mut records = fit_all(&sources, fold, cfg, |i| seed::derive(fold_seed, &[2, i as u64]), false);

    let mut repaired_sources = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if r.train_score >= cfg.repair_below {
            continue;
        }
        let failure = FailureReport {
            exception: r.details.first_error.clone(),
            wrong_positive: r.details.wrong_positive,
            wrong_negative: r.details.wrong_negative,
        };
        match oracle.request_repair(r.program.source(), &failure, rule_pos, seed::derive(fold_seed, &[3, i as u64])) {
            Ok(src) => repaired_sources.push(src),
            Err(OracleError::RepairFailed) => log::warn!("repair reply had no program; keeping the original only"),
            Err(e) => return Err(e),
        }
    }
    let repairs = repaired_sources.len();
    records.extend(fit_all(&repaired_sources, fold, cfg, |i| seed::derive(fold_seed, &[4, i as u64]), true));

    let scores: Vec<f64> = records.iter().map(|r| r.train_score).collect();
    let accepted = accepted_indices(&scores, cfg.accept_threshold);
    let mut ambiguous = 0;
    let mut tie_breaks = 0;
    let mut predictions = [Label::Negative; 2];
    let path = if accepted.is_empty() { FoldPath::Fallback } else { FoldPath::Programs };
    for (j, ex) in fold.test.iter().enumerate() {
        let tseed = seed::derive(fold_seed, &[5, j as u64]);
        predictions[j] = match path {
            FoldPath::Programs => {
                let acc: Vec<&CandidateRecord> = accepted.iter().map(|&i| &records[i]).collect();
                let mut tie = false;
                let vote = classify_by_majority(&acc, &ex.panel, || {
                    tie = true;
                    Label::Negative
                });
                if tie && cfg.cot_fallback {
                    tie_breaks += 1;
                    transduce(oracle, fold, &fold.test_images[j], rules, tseed, &mut ambiguous)?
                } else {
                    vote
                }
            }
            FoldPath::Fallback if cfg.cot_fallback => {
                transduce(oracle, fold, &fold.test_images[j], rules, tseed, &mut ambiguous)?
            }
            FoldPath::Fallback => Label::Negative,
        };
    }
    let correct = fold.test.iter().zip(&predictions).filter(|(e, &p)| e.label == p).count();
    Ok(FoldRun {
        result: FoldResult {
            holdout: fold.holdout,
            path,
            predictions,
            correct,
            candidates: records.len(),
            accepted: accepted.len(),
            repairs,
            best_train_score: scores.iter().copied().reduce(f64::max),
            tie_breaks,
            ambiguous,
        },
        records,
        accepted,
    })
}

fn require_rule(rule: &str) -> Result<(), VerifyError> {
    if rule.trim().is_empty() {
        Err(VerifyError::InvalidInput("rule text is empty".into()))
    } else {
        Ok(())
    }
}

/// Negative-side concept: the stated one, or the negation of the positive.
fn negative_concept(problem: &BongardProblem, rule_pos: &str) -> String {
    problem.rule_neg.clone().unwrap_or_else(|| prompts::negated(rule_pos))
}

/// Runs the pipeline on one fold. Oracle failures surface as errors; the
/// task-level drivers decide which of them abort only the fold.
pub fn run_fold(
    problem: &BongardProblem,
    rule: &str,
    fold: &Fold,
    oracle: &Oracle,
    index: Option<&RagIndex>,
    cfg: &VerifyConfig,
    seed: u64,
) -> Result<FoldResult, VerifyError> {
    require_rule(rule)?;
    let neg = negative_concept(problem, rule);
    Ok(pipeline((rule, &neg), fold, oracle, index, cfg, seed)?.result)
}

/// Whether an oracle error should abort the fold rather than the whole run.
fn fold_local(e: &OracleError) -> bool {
    matches!(e, OracleError::Unavailable(_) | OracleError::Network(_))
}

/// Six folds, holding out panel pair 0..5 in turn.
pub fn run_verification_task(
    problem: &BongardProblem,
    oracle: &Oracle,
    index: Option<&RagIndex>,
    cfg: &VerifyConfig,
    seed: u64,
) -> Result<VerificationOutcome, VerifyError> {
    let rule = problem
        .rule_pos
        .as_deref()
        .ok_or_else(|| VerifyError::InvalidInput(format!("problem {} has no ground-truth rule", problem.id)))?;
    let job = |k: usize| -> Result<FoldOutcome, VerifyError> {
        let fold = problem.fold(k)?;
        match run_fold(problem, rule, &fold, oracle, index, cfg, seed::derive(seed, &[problem.id as u64, k as u64])) {
            Ok(r) => Ok(FoldOutcome::Completed(r)),
            Err(VerifyError::Oracle(e)) if fold_local(&e) => {
                log::warn!("problem {} fold {k} aborted: {e}", problem.id);
                Ok(FoldOutcome::Aborted { holdout: k, error: e.to_string() })
            }
            Err(e) => Err(e),
        }
    };
    let folds: Vec<FoldOutcome> = if cfg.parallel {
        (0..SIDE).into_par_iter().map(job).collect::<Result<_, _>>()?
    } else {
        (0..SIDE).map(job).collect::<Result<_, _>>()?
    };
    Ok(VerificationOutcome::from_folds(problem.id, folds))
}

/// Verification with the two sides exchanged.
pub fn run_inversion_task(
    problem: &BongardProblem,
    oracle: &Oracle,
    index: Option<&RagIndex>,
    cfg: &VerifyConfig,
    seed: u64,
) -> Result<VerificationOutcome, VerifyError> {
    run_verification_task(&problem.inverted(), oracle, index, cfg, seed)
}

/// How well a candidate rule explains a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleScore {
    pub score: f64,
    pub train_correct: usize,
    pub test_correct: usize,
    pub path: FoldPath,
}

/// Single split (holdout 0): training panels are credited with the best
/// accepted program's hits, or with oracle labels when no program is
/// accepted; the score is all hits over the twelve panels.
pub fn score_rule_for_solution(
    rule: &str,
    problem: &BongardProblem,
    oracle: &Oracle,
    index: Option<&RagIndex>,
    cfg: &VerifyConfig,
    seed: u64,
) -> Result<RuleScore, VerifyError> {
    require_rule(rule)?;
    let neg = prompts::negated(rule);
    let fold = problem.fold(0)?;
    let run = pipeline((rule, &neg), &fold, oracle, index, cfg, seed)?;
    let train_correct = match run.accepted.first() {
        Some(&i) => run.records[i].details.correct,
        None if cfg.cot_fallback => {
            let train_images = fold.train_positive_images.iter().chain(&fold.train_negative_images);
            let mut ambiguous = 0;
            let mut hits = 0;
            for (j, (ex, img)) in fold.train.iter().zip(train_images).enumerate() {
                let l = transduce(oracle, &fold, img, (rule, &neg), seed::derive(seed, &[6, j as u64]), &mut ambiguous)?;
                hits += usize::from(l == ex.label);
            }
            hits
        }
        None => fold.train.iter().filter(|e| e.label == Label::Negative).count(),
    };
    let test_correct = run.result.correct;
    Ok(RuleScore {
        score: (train_correct + test_correct) as f64 / (2 * SIDE) as f64,
        train_correct,
        test_correct,
        path: run.result.path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRule {
    pub rule: String,
    pub score: f64,
    pub path: Option<FoldPath>,
    /// Set when the rule could not be scored (it then scores 0).
    pub error: Option<String>,
}

/// Hypothesises rules and ranks them by [`score_rule_for_solution`];
/// ties keep generation order.
pub fn solve_problem(
    problem: &BongardProblem,
    curriculum: &[(u32, String)],
    oracle: &Oracle,
    index: Option<&RagIndex>,
    cfg: &VerifyConfig,
    seed: u64,
) -> Result<Vec<RankedRule>, VerifyError> {
    let rules = match oracle.generate_hypotheses(problem.shots(), curriculum, cfg.n_rules, seed::split(seed, 0)) {
        Err(OracleError::NoHypotheses) => return Err(VerifyError::NoHypotheses),
        other => other?,
    };
    let job = |(i, rule): (usize, &String)| -> Result<RankedRule, VerifyError> {
        match score_rule_for_solution(rule, problem, oracle, index, cfg, seed::derive(seed, &[1, i as u64])) {
            Ok(s) => Ok(RankedRule { rule: rule.clone(), score: s.score, path: Some(s.path), error: None }),
            Err(VerifyError::Oracle(e)) if fold_local(&e) => {
                log::warn!("problem {}: rule `{rule}` not scored: {e}", problem.id);
                Ok(RankedRule { rule: rule.clone(), score: 0.0, path: None, error: Some(e.to_string()) })
            }
            Err(e) => Err(e),
        }
    };
    let mut ranked: Vec<RankedRule> = if cfg.parallel {
        rules.par_iter().enumerate().map(job).collect::<Result<_, _>>()?
    } else {
        rules.iter().enumerate().map(job).collect::<Result<_, _>>()?
    };
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(ranked)
}
