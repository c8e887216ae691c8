//! Scalar threshold tasks for the parameter optimiser, and the two search
//! strategies compared on them.

use bpforge_core::dsl::{Bindings, ParamKind, ParamSpec};
use bpforge_core::optimize::{maximize, OptBudget};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn float(name: &str, low: f64, high: f64) -> ParamSpec {
    ParamSpec { name: name.into(), kind: ParamKind::Float, low, high }
}

/// Ten scalar examples scored by the threshold rule `value > t`.
pub struct ThresholdTask {
    pub values: Vec<(f64, bool)>,
}

impl ThresholdTask {
    /// Five negatives just below 0.2 and five positives just above 0.7, so
    /// every threshold in the gap (0.2, 0.7) separates them.
    pub fn separable(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::new();
        for _ in 0..5 {
            values.push((0.2 - rng.random_range(0.0..0.05), false));
            values.push((0.7 + rng.random_range(0.0..0.05), true));
        }
        Self { values }
    }

    /// A gap of width `gap` at a random place, with one example of each
    /// class on its edges so the separating interval is exactly `gap` wide.
    pub fn narrow(seed: u64, gap: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = rng.random_range(0.1..0.9 - gap);
        let mut values = vec![(start, false), (start + gap, true)];
        for _ in 0..4 {
            values.push((rng.random_range(0.0..start), false));
            values.push((rng.random_range(start + gap..1.0), true));
        }
        Self { values }
    }

    pub fn score(&self, t: f64) -> f64 {
        self.values.iter().filter(|&&(v, pos)| (v > t) == pos).count() as f64 / self.values.len() as f64
    }
}

pub fn bo_best(task: &ThresholdTask, seed: u64) -> f64 {
    maximize(&[float("t", 0.0, 1.0)], |b: &Bindings| task.score(b["t"]), OptBudget::default(), seed).unwrap().score
}

pub fn random_best(task: &ThresholdTask, seed: u64, evals: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..evals).map(|_| task.score(rng.random_range(0.0..1.0))).fold(0.0, f64::max)
}
