//! Gaussian-process surrogate with a squared-exponential kernel.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Length-scales tried when fitting; the one with the highest marginal
/// likelihood wins.
pub const LENGTH_SCALES: [f64; 6] = [0.05, 0.1, 0.2, 0.3, 0.5, 1.0];

/// Observations in the unit cube plus fitted kernel hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateState {
    pub points: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise: f64,
}

/// Posterior of a fitted surrogate.
pub struct Posterior {
    points: Vec<Vec<f64>>,
    length_scale: f64,
    signal_variance: f64,
    alpha: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    y_mean: f64,
    y_scale: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kernel(a: &[f64], b: &[f64], length_scale: f64, signal_variance: f64) -> f64 {
    signal_variance * (-sq_dist(a, b) / (2.0 * length_scale * length_scale)).exp()
}

/// Cholesky of K + noise·I, escalating the jitter until it succeeds.
fn factor(
    points: &[Vec<f64>],
    length_scale: f64,
    signal_variance: f64,
    noise: f64,
) -> Cholesky<f64, Dyn> {
    let n = points.len();
    let base = DMatrix::from_fn(n, n, |i, j| kernel(&points[i], &points[j], length_scale, signal_variance));
    let mut jitter = noise;
    loop {
        let mut k = base.clone();
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(k) {
            return c;
        }
        jitter *= 10.0;
    }
}

impl SurrogateState {
    /// Builds a state from observations, choosing the length-scale by
    /// marginal likelihood on standardised scores.
    pub fn fit(points: Vec<Vec<f64>>, scores: Vec<f64>, noise: f64) -> Self {
        let (_, _, y) = standardise(&scores);
        let mut best = (f64::NEG_INFINITY, LENGTH_SCALES[0]);
        for &ls in &LENGTH_SCALES {
            let chol = factor(&points, ls, 1.0, noise);
            let alpha = chol.solve(&y);
            let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
            let lml = -0.5 * y.dot(&alpha) - 0.5 * log_det;
            if lml > best.0 {
                best = (lml, ls);
            }
        }
        Self { points, scores, length_scale: best.1, signal_variance: 1.0, noise }
    }

    pub fn posterior(&self) -> Posterior {
        let (y_mean, y_scale, y) = standardise(&self.scores);
        let chol = factor(&self.points, self.length_scale, self.signal_variance, self.noise);
        let alpha = chol.solve(&y);
        Posterior {
            points: self.points.clone(),
            length_scale: self.length_scale,
            signal_variance: self.signal_variance,
            alpha,
            chol,
            y_mean,
            y_scale,
        }
    }
}

fn standardise(scores: &[f64]) -> (f64, f64, DVector<f64>) {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let scale = if var > 1e-12 { var.sqrt() } else { 1.0 };
    (mean, scale, DVector::from_iterator(scores.len(), scores.iter().map(|s| (s - mean) / scale)))
}

impl Posterior {
    /// Predictive mean and standard deviation in the original score units.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(
            self.points.len(),
            self.points.iter().map(|p| kernel(p, x, self.length_scale, self.signal_variance)),
        );
        let mean = k.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&k).expect("triangular factor is invertible");
        let var = (self.signal_variance - v.dot(&v)).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }
}
