//! Small differentiable objectives with analytic gradients.

mod logistic;
mod mlp;
mod quadratic;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

pub use logistic::Logistic;
pub use mlp::Mlp;
pub use quadratic::Quadratic;

/// A smooth objective `f: R^d -> R` with a gradient oracle.
pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, theta: &[f64]) -> f64;

    fn gradient(&self, theta: &[f64]) -> Vec<f64>;

    /// A point with zero gradient, when one is known.
    fn optimum(&self) -> Option<&[f64]> {
        None
    }

    /// Largest curvature, used for default step sizes.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Number of data samples; zero for objectives without a finite-sum form.
    fn n_samples(&self) -> usize {
        0
    }

    /// Gradient of the average loss over `batch` (sample indices), plus any
    /// regularizer. Problems without samples return the full gradient.
    fn batch_gradient(&self, theta: &[f64], batch: &[usize]) -> Vec<f64> {
        let _ = batch;
        self.gradient(theta)
    }

    fn optimal_value(&self) -> Option<f64> {
        self.optimum().map(|t| self.value(t))
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian starting point with standard deviation `scale`.
pub fn initial_point(dim: usize, seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed_1417);
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect()
}

/// Relative discrepancy between the analytic gradient and central finite
/// differences of `value` with step `h` at `theta`.
pub fn gradient_check<P: Problem + ?Sized>(problem: &P, theta: &[f64], h: f64) -> f64 {
    let analytic = problem.gradient(theta);
    let mut probe = theta.to_vec();
    let numeric: Vec<f64> = (0..theta.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = problem.value(&probe);
            probe[i] = orig - h;
            let down = problem.value(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
    let scale = norm(&analytic).max(norm(&numeric)).max(1e-12);
    norm(&diff) / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_point_is_seeded() {
        assert_eq!(initial_point(5, 3, 1.0), initial_point(5, 3, 1.0));
        assert_ne!(initial_point(5, 3, 1.0), initial_point(5, 4, 1.0));
        assert_eq!(initial_point(4, 1, 0.0), vec![0.0; 4]);
    }
}
