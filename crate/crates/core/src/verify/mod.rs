//! Program-based verification: scoring, the accepted set, majority voting,
//! problems and folds. The oracle-driven pipelines live in [`pipeline`].

mod pipeline;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{evaluate_panel, Bindings, ClassifierProgram, EvalError, Label, Panel};
use crate::optimize::{OptBudget, OptTrace};
use crate::oracle::{Attachment, OracleError, Shots};
use crate::raster::BinaryImage;

pub use pipeline::{
    run_fold, run_inversion_task, run_verification_task, score_rule_for_solution, solve_problem,
    FoldOutcome, FoldPath, FoldResult, RankedRule, RuleScore, VerificationOutcome,
};

/// Panels per side of a problem.
pub const SIDE: usize = 6;
/// Training score a program needs to be accepted.
pub const ACCEPT_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no hypotheses")]
    NoHypotheses,
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
}

/// A panel with its true label.
#[derive(Debug, Clone)]
pub struct Example {
    pub panel: Arc<Panel>,
    pub label: Label,
}

impl Example {
    pub fn new(image: BinaryImage, label: Label) -> Self {
        Self { panel: Arc::new(Panel::new(image)), label }
    }
}

/// Outcome of running a program over labelled examples.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScoreDetails {
    pub correct: usize,
    pub total: usize,
    /// Positive examples not labelled POSITIVE (including errors).
    pub wrong_positive: usize,
    /// Negative examples not labelled NEGATIVE (including errors).
    pub wrong_negative: usize,
    /// First runtime error message, if any example raised one.
    pub first_error: Option<String>,
}

impl ScoreDetails {
    pub fn score(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Runs `p` on every example; a runtime error counts as a wrong answer.
pub fn score_details(
    p: &ClassifierProgram,
    bindings: &Bindings,
    examples: &[Example],
) -> Result<ScoreDetails, VerifyError> {
    if examples.is_empty() {
        return Err(VerifyError::InvalidInput("cannot score on an empty example set".into()));
    }
    let mut d = ScoreDetails { total: examples.len(), ..Default::default() };
    for ex in examples {
        let got = match evaluate_panel(p, &ex.panel, bindings) {
            Ok(l) => Some(l),
            Err(EvalError::Binding(m)) => return Err(VerifyError::InvalidInput(m)),
            Err(e) => {
                d.first_error.get_or_insert_with(|| e.to_string());
                None
            }
        };
        if got == Some(ex.label) {
            d.correct += 1;
        } else if ex.label == Label::Positive {
            d.wrong_positive += 1;
        } else {
            d.wrong_negative += 1;
        }
    }
    Ok(d)
}

/// Fraction of examples the program labels correctly.
pub fn score_program(p: &ClassifierProgram, bindings: &Bindings, examples: &[Example]) -> Result<f64, VerifyError> {
    score_details(p, bindings, examples).map(|d| d.score())
}

/// A synthesized program after parameter fitting.
#[derive(Debug, Clone)]
pub struct CandidateRecord {
    pub program: ClassifierProgram,
    pub bindings: Bindings,
    pub train_score: f64,
    pub details: ScoreDetails,
    pub repaired: bool,
    pub opt_trace: OptTrace,
}

/// Indices of the scores that equal the maximum and reach `threshold`.
pub fn accepted_indices(scores: &[f64], threshold: f64) -> Vec<usize> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max < threshold {
        return Vec::new();
    }
    (0..scores.len()).filter(|&i| scores[i] == max).collect()
}

/// Records with the maximal training score, provided it is at least 0.9.
pub fn accepted_set(records: &[CandidateRecord]) -> Vec<&CandidateRecord> {
    let scores: Vec<f64> = records.iter().map(|r| r.train_score).collect();
    accepted_indices(&scores, ACCEPT_THRESHOLD).into_iter().map(|i| &records[i]).collect()
}

/// Strict-majority label, or `None` on a tie (including no votes).
pub fn majority_vote(labels: &[Label]) -> Option<Label> {
    let pos = labels.iter().filter(|&&l| l == Label::Positive).count();
    let neg = labels.len() - pos;
    match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => Some(Label::Positive),
        std::cmp::Ordering::Less => Some(Label::Negative),
        std::cmp::Ordering::Equal => None,
    }
}

/// Majority label of the accepted programs on `panel`. Programs that fail on
/// the panel abstain; ties go to `tie_break`.
pub fn classify_by_majority(
    accepted: &[&CandidateRecord],
    panel: &Panel,
    tie_break: impl FnOnce() -> Label,
) -> Label {
    let votes: Vec<Label> =
        accepted.iter().filter_map(|r| evaluate_panel(&r.program, panel, &r.bindings).ok()).collect();
    majority_vote(&votes).unwrap_or_else(tie_break)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Concept,
    Number,
    Same,
    Size,
    Spatial,
}

impl Category {
    pub const ALL: [Category; 5] =
        [Category::Concept, Category::Number, Category::Same, Category::Size, Category::Spatial];

    pub fn name(self) -> &'static str {
        match self {
            Category::Concept => "concept",
            Category::Number => "number",
            Category::Same => "same",
            Category::Size => "size",
            Category::Spatial => "spatial",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

/// Six positive and six negative panels with optional ground truth.
#[derive(Debug, Clone)]
pub struct BongardProblem {
    pub id: u32,
    positives: Vec<Arc<Panel>>,
    negatives: Vec<Arc<Panel>>,
    pub rule_pos: Option<String>,
    pub rule_neg: Option<String>,
    pub category: Option<Category>,
    attachments: Arc<OnceLock<(Vec<Attachment>, Vec<Attachment>)>>,
}

impl PartialEq for BongardProblem {
    fn eq(&self, o: &Self) -> bool {
        let same = |a: &[Arc<Panel>], b: &[Arc<Panel>]| a.iter().zip(b).all(|(x, y)| x.image() == y.image());
        self.id == o.id
            && same(&self.positives, &o.positives)
            && same(&self.negatives, &o.negatives)
            && self.rule_pos == o.rule_pos
            && self.rule_neg == o.rule_neg
            && self.category == o.category
    }
}

impl BongardProblem {
    pub fn new(
        id: u32,
        positives: Vec<BinaryImage>,
        negatives: Vec<BinaryImage>,
        rule_pos: Option<String>,
        rule_neg: Option<String>,
        category: Option<Category>,
    ) -> Result<Self, VerifyError> {
        if positives.len() != SIDE || negatives.len() != SIDE {
            return Err(VerifyError::InvalidInput(format!(
                "problem {id} needs {SIDE} panels per side, got {} and {}",
                positives.len(),
                negatives.len()
            )));
        }
        let clean = |r: Option<String>| r.map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
        let wrap = |v: Vec<BinaryImage>| v.into_iter().map(|i| Arc::new(Panel::new(i))).collect();
        Ok(Self {
            id,
            positives: wrap(positives),
            negatives: wrap(negatives),
            rule_pos: clean(rule_pos),
            rule_neg: clean(rule_neg),
            category,
            attachments: Arc::default(),
        })
    }

    pub fn positives(&self) -> &[Arc<Panel>] {
        &self.positives
    }

    pub fn negatives(&self) -> &[Arc<Panel>] {
        &self.negatives
    }

    /// The same problem with sides (panels and rule texts) exchanged.
    pub fn inverted(&self) -> Self {
        Self {
            id: self.id,
            positives: self.negatives.clone(),
            negatives: self.positives.clone(),
            rule_pos: self.rule_neg.clone(),
            rule_neg: self.rule_pos.clone(),
            category: self.category,
            attachments: Arc::default(),
        }
    }

    /// PNG attachments for every panel: positives, then negatives.
    pub fn attachments(&self) -> (&[Attachment], &[Attachment]) {
        let (p, n) = self.attachments.get_or_init(|| {
            let enc = |v: &[Arc<Panel>]| v.iter().map(|p| Attachment::from_image(p.image())).collect();
            (enc(&self.positives), enc(&self.negatives))
        });
        (p, n)
    }

    pub fn shots(&self) -> Shots<'_> {
        let (positives, negatives) = self.attachments();
        Shots { positives, negatives }
    }

    /// Every panel with its label: positives first.
    pub fn examples(&self) -> Vec<Example> {
        let side = |v: &[Arc<Panel>], label| v.iter().map(|p| Example { panel: p.clone(), label }).collect::<Vec<_>>();
        let mut all = side(&self.positives, Label::Positive);
        all.extend(side(&self.negatives, Label::Negative));
        all
    }

    /// Leaves out panel `holdout` of each side for testing.
    pub fn fold(&self, holdout: usize) -> Result<Fold, VerifyError> {
        if holdout >= SIDE {
            return Err(VerifyError::InvalidInput(format!("holdout index {holdout} out of range")));
        }
        let (pa, na) = self.attachments();
        let keep = |i: &usize| *i != holdout;
        let pick = |v: &[Arc<Panel>], label| {
            (0..SIDE).filter(keep).map(|i| Example { panel: v[i].clone(), label }).collect::<Vec<_>>()
        };
        let mut train = pick(&self.positives, Label::Positive);
        train.extend(pick(&self.negatives, Label::Negative));
        let att = |v: &[Attachment]| (0..SIDE).filter(keep).map(|i| v[i].clone()).collect();
        Ok(Fold {
            holdout,
            train,
            test: vec![
                Example { panel: self.positives[holdout].clone(), label: Label::Positive },
                Example { panel: self.negatives[holdout].clone(), label: Label::Negative },
            ],
            train_positive_images: att(pa),
            train_negative_images: att(na),
            test_images: vec![pa[holdout].clone(), na[holdout].clone()],
        })
    }
}

/// Train/test split for one holdout index.
#[derive(Debug, Clone)]
pub struct Fold {
    pub holdout: usize,
    /// Five positives then five negatives.
    pub train: Vec<Example>,
    /// The held-out positive, then the held-out negative.
    pub test: Vec<Example>,
    pub train_positive_images: Vec<Attachment>,
    pub train_negative_images: Vec<Attachment>,
    pub test_images: Vec<Attachment>,
}

impl Fold {
    pub fn shots(&self) -> Shots<'_> {
        Shots { positives: &self.train_positive_images, negatives: &self.train_negative_images }
    }
}

/// Knobs of the verification pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub n_programs: usize,
    pub budget: OptBudget,
    pub accept_threshold: f64,
    /// Programs scoring below this on their training set get one repair.
    pub repair_below: f64,
    /// Use oracle labelling when no program is accepted or the vote ties.
    pub cot_fallback: bool,
    /// Rules requested per hypothesis call.
    pub n_rules: usize,
    pub parallel: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n_programs: 10,
            budget: OptBudget::default(),
            accept_threshold: ACCEPT_THRESHOLD,
            repair_below: 1.0,
            cot_fallback: true,
            n_rules: crate::oracle::RULES_PER_CALL,
            parallel: true,
        }
    }
}
