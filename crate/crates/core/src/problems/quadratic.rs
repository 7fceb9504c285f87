use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, RnaError};

use super::Problem;

/// `f(x) = 0.5 x^T A x - b^T x` with `A = Q diag(mu) Q^T`, the `mu` log-spaced
/// in `[1, condition]` and `Q` a random orthogonal matrix.
#[derive(Debug, Clone)]
pub struct Quadratic {
    dim: usize,
    /// Row-major `d x d`.
    a: Vec<f64>,
    b: Vec<f64>,
    eigenvalues: Vec<f64>,
    optimum: Vec<f64>,
    condition: f64,
}

impl Quadratic {
    pub fn new(dim: usize, condition: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(RnaError::InvalidConfig("quadratic dimension must be >= 1".into()));
        }
        if !(condition >= 1.0 && condition.is_finite()) {
            return Err(RnaError::InvalidConfig(format!(
                "condition number must be finite and >= 1, got {condition}"
            )));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };

        let eigenvalues: Vec<f64> = if dim == 1 {
            vec![condition]
        } else {
            (0..dim)
                .map(|i| condition.powf(i as f64 / (dim - 1) as f64))
                .collect()
        };

        let g = DMatrix::from_fn(dim, dim, |_, _| gauss());
        let qr = g.qr();
        let mut q = qr.q();
        // Fix column signs so Q is a deterministic function of G.
        let r = qr.r();
        for j in 0..dim {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        let b: Vec<f64> = (0..dim).map(|_| gauss()).collect();

        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                a[i * dim + j] = (0..dim).map(|k| q[(i, k)] * eigenvalues[k] * q[(j, k)]).sum();
            }
        }
        // x* = Q diag(1/mu) Q^T b
        let qtb: Vec<f64> = (0..dim)
            .map(|k| (0..dim).map(|i| q[(i, k)] * b[i]).sum::<f64>() / eigenvalues[k])
            .collect();
        let optimum = (0..dim)
            .map(|i| (0..dim).map(|k| q[(i, k)] * qtb[k]).sum())
            .collect();

        Ok(Self {
            dim,
            a,
            b,
            eigenvalues,
            optimum,
            condition,
        })
    }

    /// Row-major Hessian.
    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn apply(&self, theta: &[f64]) -> Vec<f64> {
        self.a
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(theta).map(|(a, t)| a * t).sum())
            .collect()
    }
}

impl Problem for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let at = self.apply(theta);
        let quad: f64 = at.iter().zip(theta).map(|(a, t)| a * t).sum();
        let lin: f64 = self.b.iter().zip(theta).map(|(b, t)| b * t).sum();
        0.5 * quad - lin
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = self.apply(theta);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
        g
    }

    fn optimum(&self) -> Option<&[f64]> {
        Some(&self.optimum)
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.condition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gradient_check, initial_point, norm};

    #[test]
    fn scalar_instance() {
        let q = Quadratic::new(1, 1.0, 11).unwrap();
        let b = q.rhs()[0];
        assert!((q.matrix()[0] - 1.0).abs() < 1e-15);
        assert!((q.optimum().unwrap()[0] - b).abs() < 1e-15);
        let t = 0.7;
        assert!((q.value(&[t]) - (0.5 * t * t - b * t)).abs() < 1e-15);
    }

    #[test]
    fn optimum_beats_random_points() {
        let q = Quadratic::new(8, 30.0, 2).unwrap();
        let fstar = q.optimal_value().unwrap();
        for s in 0..100 {
            assert!(fstar <= q.value(&initial_point(8, s, 2.0)));
        }
    }

    #[test]
    fn spectrum_and_symmetry() {
        let q = Quadratic::new(5, 100.0, 0).unwrap();
        assert_eq!(q.eigenvalues()[0], 1.0);
        assert!((q.eigenvalues()[4] - 100.0).abs() < 1e-12);
        let a = q.matrix();
        for i in 0..5 {
            for j in 0..5 {
                assert!((a[i * 5 + j] - a[j * 5 + i]).abs() < 1e-13);
            }
        }
        assert_eq!(q.smoothness(), Some(100.0));
    }

    #[test]
    fn deterministic_in_seed() {
        let a = Quadratic::new(6, 10.0, 5).unwrap();
        let b = Quadratic::new(6, 10.0, 5).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.rhs(), b.rhs());
        assert_ne!(Quadratic::new(6, 10.0, 6).unwrap().rhs(), a.rhs());
    }

    #[test]
    fn invalid_configs() {
        assert!(Quadratic::new(0, 1.0, 0).is_err());
        assert!(Quadratic::new(3, 0.5, 0).is_err());
        assert!(Quadratic::new(3, f64::NAN, 0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let q = Quadratic::new(10, 50.0, 9).unwrap();
        for s in 0..20 {
            assert!(gradient_check(&q, &initial_point(10, s, 1.0), 1e-5) <= 1e-5);
        }
        assert!(norm(&q.gradient(q.optimum().unwrap())) <= 1e-10);
    }
}
