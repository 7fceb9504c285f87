use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, RnaError};

use super::Problem;

const TARGET_NOISE: f64 = 0.1;

/// Mean-squared regression loss `1/(2n) sum_i (net(x_i) - y_i)^2` of a
/// one-hidden-layer tanh network `net(x) = w2^T tanh(W1 x + b1) + b2`.
///
/// Parameters are packed as `[W1 (hidden x d_in, row-major), b1, w2, b2]`.
/// Targets come from a randomly drawn teacher network of the same shape plus
/// Gaussian noise.
#[derive(Debug, Clone)]
pub struct Mlp {
    d_in: usize,
    hidden: usize,
    n: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

struct Layout {
    w1: std::ops::Range<usize>,
    b1: std::ops::Range<usize>,
    w2: std::ops::Range<usize>,
    b2: usize,
}

impl Mlp {
    pub fn new(d_in: usize, hidden: usize, n_samples: usize, seed: u64) -> Result<Self> {
        if d_in == 0 || hidden == 0 || n_samples == 0 {
            return Err(RnaError::InvalidConfig("mlp sizes must all be >= 1".into()));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
        let inputs: Vec<f64> = (0..n_samples * d_in).map(|_| gauss()).collect();
        let mut problem = Self {
            d_in,
            hidden,
            n: n_samples,
            inputs,
            targets: vec![0.0; n_samples],
        };
        let teacher: Vec<f64> = (0..problem.dim())
            .map(|_| gauss() / (d_in as f64).sqrt())
            .collect();
        for i in 0..n_samples {
            let (pred, _) = problem.forward(&teacher, i);
            problem.targets[i] = pred + TARGET_NOISE * gauss();
        }
        Ok(problem)
    }

    /// Replaces the targets, e.g. to center them.
    pub fn with_targets(mut self, targets: Vec<f64>) -> Result<Self> {
        if targets.len() != self.n {
            return Err(RnaError::DimensionMismatch {
                expected: self.n,
                got: targets.len(),
            });
        }
        self.targets = targets;
        Ok(self)
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.d_in
    }

    fn layout(&self) -> Layout {
        let w1_len = self.hidden * self.d_in;
        Layout {
            w1: 0..w1_len,
            b1: w1_len..w1_len + self.hidden,
            w2: w1_len + self.hidden..w1_len + 2 * self.hidden,
            b2: w1_len + 2 * self.hidden,
        }
    }

    /// Index of the output bias in the parameter vector.
    pub fn output_bias_index(&self) -> usize {
        self.layout().b2
    }

    /// Reorders hidden units of a parameter vector: unit `j` of the result is
    /// unit `perm[j]` of `theta`.
    pub fn permute_hidden(&self, theta: &[f64], perm: &[usize]) -> Vec<f64> {
        assert_eq!(perm.len(), self.hidden);
        let l = self.layout();
        let mut out = theta.to_vec();
        for (j, &src) in perm.iter().enumerate() {
            let dst_row = l.w1.start + j * self.d_in;
            let src_row = l.w1.start + src * self.d_in;
            out[dst_row..dst_row + self.d_in].copy_from_slice(&theta[src_row..src_row + self.d_in]);
            out[l.b1.start + j] = theta[l.b1.start + src];
            out[l.w2.start + j] = theta[l.w2.start + src];
        }
        out
    }

    fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d_in..(i + 1) * self.d_in]
    }

    /// Prediction and hidden activations for sample `i`.
    fn forward(&self, theta: &[f64], i: usize) -> (f64, Vec<f64>) {
        let l = self.layout();
        let x = self.input(i);
        let w1 = &theta[l.w1];
        let b1 = &theta[l.b1];
        let w2 = &theta[l.w2];
        let h: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let row = &w1[j * self.d_in..(j + 1) * self.d_in];
                let pre: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b1[j];
                pre.tanh()
            })
            .collect();
        let pred = h.iter().zip(w2).map(|(a, b)| a * b).sum::<f64>() + theta[l.b2];
        (pred, h)
    }

    fn backprop(&self, theta: &[f64], samples: impl Iterator<Item = usize>, count: usize) -> Vec<f64> {
        let l = self.layout();
        let mut g = vec![0.0; theta.len()];
        for i in samples {
            let (pred, h) = self.forward(theta, i);
            let err = pred - self.targets[i];
            g[l.b2] += err;
            let x = self.input(i);
            for j in 0..self.hidden {
                g[l.w2.start + j] += err * h[j];
                let delta = err * theta[l.w2.start + j] * (1.0 - h[j] * h[j]);
                g[l.b1.start + j] += delta;
                let row = l.w1.start + j * self.d_in;
                for (gk, xk) in g[row..row + self.d_in].iter_mut().zip(x) {
                    *gk += delta * xk;
                }
            }
        }
        let inv = 1.0 / count as f64;
        g.iter_mut().for_each(|v| *v *= inv);
        g
    }
}

impl Problem for Mlp {
    fn dim(&self) -> usize {
        self.hidden * self.d_in + 2 * self.hidden + 1
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let sse: f64 = (0..self.n)
            .map(|i| {
                let (pred, _) = self.forward(theta, i);
                (pred - self.targets[i]).powi(2)
            })
            .sum();
        0.5 * sse / self.n as f64
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        self.backprop(theta, 0..self.n, self.n)
    }

    fn n_samples(&self) -> usize {
        self.n
    }

    fn batch_gradient(&self, theta: &[f64], batch: &[usize]) -> Vec<f64> {
        if batch.is_empty() {
            return self.gradient(theta);
        }
        self.backprop(theta, batch.iter().copied(), batch.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gradient_check, initial_point};

    #[test]
    fn gradient_matches_finite_differences() {
        let p = Mlp::new(3, 5, 40, 2).unwrap();
        for s in 0..20 {
            assert!(gradient_check(&p, &initial_point(p.dim(), s, 0.7), 1e-5) <= 1e-5);
        }
    }

    #[test]
    fn output_bias_gradient_at_zero() {
        let p = Mlp::new(2, 4, 25, 8).unwrap();
        let g = p.gradient(&vec![0.0; p.dim()]);
        let mean_target = p.targets().iter().sum::<f64>() / 25.0;
        assert!((g[p.output_bias_index()] + mean_target).abs() < 1e-15);
        // Every other component vanishes: tanh(0) = 0 and w2 = 0.
        for (i, v) in g.iter().enumerate() {
            if i != p.output_bias_index() {
                assert_eq!(*v, 0.0);
            }
        }

        let centered: Vec<f64> = p.targets().iter().map(|t| t - mean_target).collect();
        let p = p.with_targets(centered).unwrap();
        let g = p.gradient(&vec![0.0; p.dim()]);
        assert!(g[p.output_bias_index()].abs() < 1e-15);
    }

    #[test]
    fn hidden_permutation_invariance() {
        let p = Mlp::new(3, 6, 30, 5).unwrap();
        let theta = initial_point(p.dim(), 1, 1.0);
        let permuted = p.permute_hidden(&theta, &[3, 0, 5, 1, 4, 2]);
        assert_ne!(theta, permuted);
        assert!((p.value(&theta) - p.value(&permuted)).abs() <= 1e-12);
    }

    #[test]
    fn dimension_and_errors() {
        let p = Mlp::new(4, 3, 10, 0).unwrap();
        assert_eq!(p.dim(), 4 * 3 + 3 + 3 + 1);
        assert!(Mlp::new(0, 3, 10, 0).is_err());
        assert!(p.clone().with_targets(vec![0.0; 3]).is_err());
    }
}
