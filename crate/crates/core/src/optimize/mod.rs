//! Bayesian optimisation of a program's declared parameters.
//!
//! Scores are fractions over a handful of examples, so the objective is
//! piecewise constant. A GP with a small noise floor still ranks regions
//! usefully, and the search stops as soon as a perfect score appears.

mod gp;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

pub use gp::{Posterior, SurrogateState, LENGTH_SCALES};

use crate::dsl::{Bindings, ClassifierProgram, ParamKind, ParamSpec};
use crate::seed;
use crate::verify::{score_program, Example};

/// Score noise floor added to the kernel diagonal.
pub const NOISE_FLOOR: f64 = 1e-6;
/// Size of the quasi-random candidate set scanned by the acquisition step.
pub const CANDIDATES: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("invalid budget: {0}")]
    Budget(String),
    #[error("no training examples")]
    EmptyTrain,
}

/// Evaluation budget: `init_design` space-filling points, then acquisition
/// steps up to `total_evals`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptBudget {
    pub total_evals: usize,
    pub init_design: usize,
}

impl Default for OptBudget {
    fn default() -> Self {
        Self { total_evals: 15, init_design: 5 }
    }
}

impl OptBudget {
    pub fn new(total_evals: usize, init_design: usize) -> Result<Self, OptimizeError> {
        let b = Self { total_evals, init_design };
        b.check()?;
        Ok(b)
    }

    pub fn check(&self) -> Result<(), OptimizeError> {
        if self.init_design >= 1 && self.init_design < self.total_evals {
            Ok(())
        } else {
            Err(OptimizeError::Budget(format!(
                "need 1 <= init_design < total_evals, got {} and {}",
                self.init_design, self.total_evals
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub bindings: Bindings,
    pub score: f64,
}

/// Every evaluated point in order, plus the index of the first best one.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OptTrace {
    pub evaluations: Vec<Evaluation>,
    pub best_index: usize,
}

impl OptTrace {
    pub fn best(&self) -> Option<&Evaluation> {
        self.evaluations.get(self.best_index)
    }

    /// Running maximum of the score after each evaluation.
    pub fn running_best(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.evaluations
            .iter()
            .map(|e| {
                best = best.max(e.score);
                best
            })
            .collect()
    }

    /// One JSON object per evaluation, newline-terminated.
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for (i, e) in self.evaluations.iter().enumerate() {
            let line = serde_json::json!({
                "step": i,
                "bindings": e.bindings,
                "score": e.score,
                "best": i == self.best_index,
            });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    fn push(&mut self, bindings: Bindings, score: f64) {
        if self.evaluations.is_empty() || score > self.evaluations[self.best_index].score {
            self.best_index = self.evaluations.len();
        }
        self.evaluations.push(Evaluation { bindings, score });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub bindings: Bindings,
    pub score: f64,
    pub trace: OptTrace,
}

/// Standard expected-improvement closed form for maximisation.
pub fn expected_improvement(mean: f64, stdev: f64, best: f64) -> f64 {
    let gain = mean - best;
    if stdev <= 0.0 {
        return gain.max(0.0);
    }
    let n = Normal::standard();
    let z = gain / stdev;
    (gain * n.cdf(z) + stdev * n.pdf(z)).max(0.0)
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `n` Halton points in `[0,1)^d` with a random Cranley–Patterson shift.
/// Dimensions beyond the prime table fall back to plain uniform draws.
fn scrambled_halton(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    (0..n)
        .map(|i| {
            (0..d)
                .map(|k| match PRIMES.get(k) {
                    Some(&b) => (radical_inverse(i as u64 + 1, b) + shift[k]).fract(),
                    None => rng.random::<f64>(),
                })
                .collect()
        })
        .collect()
}

fn denormalise(specs: &[ParamSpec], x: &[f64]) -> Bindings {
    specs
        .iter()
        .zip(x)
        .map(|(s, &u)| {
            let v = s.low + u.clamp(0.0, 1.0) * (s.high - s.low);
            let v = match s.kind {
                ParamKind::Int => v.round().clamp(s.low, s.high),
                ParamKind::Float => v.clamp(s.low, s.high),
            };
            (s.name.clone(), v)
        })
        .collect()
}

fn normalise(specs: &[ParamSpec], b: &Bindings) -> Vec<f64> {
    specs.iter().map(|s| (b[&s.name] - s.low) / (s.high - s.low)).collect()
}

fn grid_step(s: &ParamSpec) -> f64 {
    match s.kind {
        ParamKind::Int => 1.0,
        ParamKind::Float => (s.high - s.low) / CANDIDATES as f64,
    }
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

/// Moves `b` one grid step at a time (dimension by dimension, up then down)
/// until it differs from every observed point. Returns `b` unchanged when
/// the whole neighbourhood is already observed.
fn avoid_collision(specs: &[ParamSpec], b: Bindings, observed: &[Vec<f64>]) -> Bindings {
    let taken = |b: &Bindings| observed.iter().any(|o| same_point(o, &normalise(specs, b)));
    if !taken(&b) {
        return b;
    }
    for s in specs {
        for dir in [1.0, -1.0] {
            let v = b[&s.name] + dir * grid_step(s);
            if v < s.low || v > s.high {
                continue;
            }
            let mut trial = b.clone();
            trial.insert(s.name.clone(), v);
            if !taken(&trial) {
                return trial;
            }
        }
    }
    b
}

/// Picks the candidate with the highest expected improvement (or, when the
/// surrogate expects no improvement anywhere, the most uncertain one).
pub fn suggest_next(s: &SurrogateState, specs: &[ParamSpec], seed: u64) -> Bindings {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let post = s.posterior();
    let best = s.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cands = scrambled_halton(CANDIDATES, specs.len(), &mut rng);
    let scored: Vec<(f64, f64)> = cands
        .iter()
        .map(|c| {
            let (m, sd) = post.predict(c);
            (expected_improvement(m, sd, best), sd)
        })
        .collect();
    let argmax = |key: &dyn Fn(&(f64, f64)) -> f64| {
        (0..scored.len()).fold(0, |bi, i| if key(&scored[i]) > key(&scored[bi]) { i } else { bi })
    };
    let mut pick = argmax(&|&(ei, _)| ei);
    if scored[pick].0 <= 1e-12 {
        pick = argmax(&|&(_, sd)| sd);
    }
    avoid_collision(specs, denormalise(specs, &cands[pick]), &s.points)
}

/// Maximises `objective` over the box described by `specs`.
///
/// With no parameters the objective is evaluated once. Otherwise
/// `budget.init_design` space-filling points are followed by GP/EI steps,
/// stopping early at a score of 1.0.
pub fn maximize(
    specs: &[ParamSpec],
    mut objective: impl FnMut(&Bindings) -> f64,
    budget: OptBudget,
    seed: u64,
) -> Result<OptResult, OptimizeError> {
    budget.check()?;
    let mut trace = OptTrace::default();
    if specs.is_empty() {
        let b = Bindings::new();
        let score = objective(&b);
        trace.push(b.clone(), score);
        return Ok(OptResult { bindings: b, score, trace });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed::split(seed, 0));
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    let mut observe = |b: Bindings, points: &mut Vec<Vec<f64>>, scores: &mut Vec<f64>, trace: &mut OptTrace| {
        let score = objective(&b);
        points.push(normalise(specs, &b));
        scores.push(score);
        trace.push(b, score);
        score >= 1.0
    };

    for x in scrambled_halton(budget.init_design, specs.len(), &mut rng) {
        let b = avoid_collision(specs, denormalise(specs, &x), &points);
        if observe(b, &mut points, &mut scores, &mut trace) {
            return Ok(finish(trace));
        }
    }
    for step in budget.init_design..budget.total_evals {
        let state = SurrogateState::fit(points.clone(), scores.clone(), NOISE_FLOOR);
        let b = suggest_next(&state, specs, seed::split(seed, step as u64 + 1));
        if observe(b, &mut points, &mut scores, &mut trace) {
            break;
        }
    }
    Ok(finish(trace))
}

fn finish(trace: OptTrace) -> OptResult {
    let best = trace.best().expect("at least one evaluation").clone();
    OptResult { bindings: best.bindings, score: best.score, trace }
}

/// Fits the program's parameters to maximise its training score.
pub fn optimize_params(
    p: &ClassifierProgram,
    train: &[Example],
    budget: OptBudget,
    seed: u64,
) -> Result<OptResult, OptimizeError> {
    if train.is_empty() {
        return Err(OptimizeError::EmptyTrain);
    }
    maximize(
        p.params(),
        |b| score_program(p, b, train).expect("train set is nonempty"),
        budget,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, kind: ParamKind, low: f64, high: f64) -> ParamSpec {
        ParamSpec { name: name.into(), kind, low, high }
    }

    #[test]
    fn ei_examples() {
        assert_eq!(expected_improvement(0.5, 0.0, 0.5), 0.0);
        assert!((expected_improvement(0.7, 0.0, 0.5) - 0.2).abs() < 1e-12);
        assert!((expected_improvement(0.0, 1.0, 0.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert_eq!(expected_improvement(0.1, 0.0, 0.5), 0.0);
    }

    #[test]
    fn budget_validation() {
        assert!(OptBudget::new(15, 5).is_ok());
        assert!(OptBudget::new(5, 5).is_err());
        assert!(OptBudget::new(5, 0).is_err());
        assert_eq!(OptBudget::default(), OptBudget { total_evals: 15, init_design: 5 });
    }

    #[test]
    fn suggestion_from_single_centre_observation_is_feasible() {
        let specs = [spec("a", ParamKind::Float, -2.0, 3.0), spec("n", ParamKind::Int, 1.0, 4.0)];
        let state = SurrogateState::fit(vec![vec![0.5, 0.5]], vec![0.5], NOISE_FLOOR);
        for seed in 0..20 {
            let b = suggest_next(&state, &specs, seed);
            for s in &specs {
                assert!(s.admits(b[&s.name]), "{b:?}");
            }
        }
    }

    #[test]
    fn never_repeats_an_observed_point() {
        let specs = [spec("n", ParamKind::Int, 0.0, 3.0)];
        let mut seen = Vec::new();
        let r = maximize(&specs, |b| { seen.push(b["n"]); 0.25 }, OptBudget::new(4, 1).unwrap(), 3).unwrap();
        let mut vals: Vec<f64> = r.trace.evaluations.iter().map(|e| e.bindings["n"]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        assert_eq!(vals.len(), 4, "{seen:?}");
    }

    #[test]
    fn zero_param_objective_runs_once() {
        let r = maximize(&[], |_| 0.7, OptBudget::default(), 1).unwrap();
        assert_eq!(r.trace.evaluations.len(), 1);
        assert_eq!(r.score, 0.7);
    }

    #[test]
    fn stops_at_perfect_score() {
        let specs = [spec("t", ParamKind::Float, 0.0, 1.0)];
        let mut calls = 0;
        let r = maximize(&specs, |_| { calls += 1; 1.0 }, OptBudget::default(), 9).unwrap();
        assert_eq!(calls, 1);
        assert_eq!(r.trace.evaluations.len(), 1);
    }

    #[test]
    fn quadratic_peak_is_found() {
        let specs = [spec("x", ParamKind::Float, 0.0, 1.0)];
        let r = maximize(&specs, |b| 0.9 - (b["x"] - 0.3).powi(2), OptBudget::default(), 5).unwrap();
        assert!((r.bindings["x"] - 0.3).abs() < 0.1, "{:?}", r.bindings);
    }

    #[test]
    fn trace_jsonl_has_one_line_per_evaluation() {
        let specs = [spec("x", ParamKind::Float, 0.0, 1.0)];
        let r = maximize(&specs, |b| b["x"] * 0.5, OptBudget::default(), 2).unwrap();
        let mut buf = Vec::new();
        r.trace.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.trace.evaluations.len());
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v["score"].is_f64());
        }
    }
}
