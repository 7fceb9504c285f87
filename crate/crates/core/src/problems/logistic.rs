use std::sync::OnceLock;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, RnaError};

use super::{norm, Problem};

/// Gradient-norm target for the cached reference optimum.
pub const REFERENCE_TOLERANCE: f64 = 1e-12;
const REFERENCE_MAX_STEPS: usize = 2_000_000;
const LABEL_FLIP_RATE: f64 = 0.05;

/// l2-regularized logistic loss
/// `f(w) = mean_i log(1 + exp(-y_i x_i^T w)) + l2/2 |w|^2`
/// on Gaussian features with labels from a planted separator (with a few flipped).
#[derive(Debug)]
pub struct Logistic {
    n: usize,
    dim: usize,
    /// Row-major `n x d`.
    features: Vec<f64>,
    labels: Vec<f64>,
    l2: f64,
    smoothness: f64,
    reference: OnceLock<Vec<f64>>,
}

impl Logistic {
    pub fn new(n_samples: usize, dim: usize, l2: f64, seed: u64) -> Result<Self> {
        if n_samples == 0 || dim == 0 {
            return Err(RnaError::InvalidConfig(
                "logistic problem needs n_samples >= 1 and dim >= 1".into(),
            ));
        }
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(RnaError::InvalidConfig(format!("l2 must be finite and >= 0, got {l2}")));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let planted: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut features = Vec::with_capacity(n_samples * dim);
        let mut labels = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let margin: f64 = x.iter().zip(&planted).map(|(a, b)| a * b).sum();
            let mut y = if margin >= 0.0 { 1.0 } else { -1.0 };
            if rng.gen::<f64>() < LABEL_FLIP_RATE {
                y = -y;
            }
            features.extend(x);
            labels.push(y);
        }
        let mut problem = Self {
            n: n_samples,
            dim,
            features,
            labels,
            l2,
            smoothness: 0.0,
            reference: OnceLock::new(),
        };
        problem.smoothness = problem.largest_gram_eigenvalue() / (4.0 * n_samples as f64) + l2;
        Ok(problem)
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Power iteration on `X^T X`, scaled up slightly to bound the true value.
    fn largest_gram_eigenvalue(&self) -> f64 {
        let mut v = vec![1.0 / (self.dim as f64).sqrt(); self.dim];
        let mut estimate = 0.0;
        for _ in 0..500 {
            let xv: Vec<f64> = (0..self.n).map(|i| dot(self.row(i), &v)).collect();
            let mut w = vec![0.0; self.dim];
            for (i, s) in xv.iter().enumerate() {
                for (wj, xj) in w.iter_mut().zip(self.row(i)) {
                    *wj += s * xj;
                }
            }
            let nw = norm(&w);
            if nw == 0.0 {
                return 0.0;
            }
            let next = nw;
            v = w.into_iter().map(|x| x / nw).collect();
            if (next - estimate).abs() <= 1e-12 * next {
                estimate = next;
                break;
            }
            estimate = next;
        }
        estimate * 1.01
    }

    fn accumulate(&self, theta: &[f64], samples: impl Iterator<Item = usize>, count: usize) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for i in samples {
            let x = self.row(i);
            let y = self.labels[i];
            // d/dm log(1 + exp(-m)) = -sigmoid(-m)
            let m = y * dot(x, theta);
            let coef = -y * sigmoid(-m);
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += coef * xj;
            }
        }
        let inv = 1.0 / count as f64;
        for (gj, tj) in g.iter_mut().zip(theta) {
            *gj = *gj * inv + self.l2 * tj;
        }
        g
    }

    /// High-accuracy minimizer from plain gradient descent, computed once.
    pub fn reference_optimum(&self) -> &[f64] {
        self.reference.get_or_init(|| {
            let eta = 1.0 / self.smoothness;
            let mut theta = vec![0.0; self.dim];
            for _ in 0..REFERENCE_MAX_STEPS {
                let g = self.gradient(&theta);
                if norm(&g) <= REFERENCE_TOLERANCE {
                    break;
                }
                for (t, gi) in theta.iter_mut().zip(&g) {
                    *t -= eta * gi;
                }
            }
            theta
        })
    }
}

impl Problem for Logistic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let loss: f64 = (0..self.n)
            .map(|i| softplus(-self.labels[i] * dot(self.row(i), theta)))
            .sum::<f64>()
            / self.n as f64;
        loss + 0.5 * self.l2 * dot(theta, theta)
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        self.accumulate(theta, 0..self.n, self.n)
    }

    fn optimum(&self) -> Option<&[f64]> {
        Some(self.reference_optimum())
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }

    fn n_samples(&self) -> usize {
        self.n
    }

    fn batch_gradient(&self, theta: &[f64], batch: &[usize]) -> Vec<f64> {
        if batch.is_empty() {
            return self.gradient(theta);
        }
        self.accumulate(theta, batch.iter().copied(), batch.len())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
