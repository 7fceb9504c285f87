//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the solver under test: ridge solutions come from
//! an SVD of the stacked matrix `[R; sqrt(lambda) I]`, whose right singular
//! vectors and squared singular values are the eigenpairs of
//! `R^T R + lambda I`; dense linear systems go through an LU factorization.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use rna::{Problem, ResidualMatrix};

/// `z = V diag(1 / s^2) V^T 1` from the eigenpairs of `R^T R + lambda I`.
pub fn eigen_ridge_solve(columns: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    let d = columns[0].len();
    let k = columns.len();
    let mut stacked = DMatrix::<f64>::zeros(d + k, k);
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            stacked[(i, j)] = *v;
        }
        stacked[(d + j, j)] = lambda.sqrt();
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let ones = DVector::<f64>::from_element(k, 1.0);
    let proj = &v_t * ones;
    let mut z = DVector::<f64>::zeros(k);
    for (idx, s) in svd.singular_values.iter().enumerate() {
        let w = proj[idx] / (s * s);
        for j in 0..k {
            z[j] += v_t[(idx, j)] * w;
        }
    }
    z.iter().copied().collect()
}

/// Normalized oracle coefficients.
pub fn eigen_coefficients(columns: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    let z = eigen_ridge_solve(columns, lambda);
    let s: f64 = z.iter().sum();
    z.iter().map(|v| v / s).collect()
}

/// Solves the dense row-major system `A x = b` by LU with partial pivoting.
pub fn dense_solve(a_row_major: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let a = DMatrix::from_row_slice(n, n, a_row_major);
    let x = a.lu().solve(&DVector::from_column_slice(b)).expect("nonsingular system");
    x.iter().copied().collect()
}

pub fn residual_columns(iterates: &[Vec<f64>]) -> Vec<Vec<f64>> {
    iterates
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect())
        .collect()
}

pub fn columns_of(r: &ResidualMatrix) -> Vec<Vec<f64>> {
    r.columns().map(<[f64]>::to_vec).collect()
}

/// `steps + 1` plain gradient-descent iterates, written out by hand.
pub fn gd_iterates<P: Problem + ?Sized>(problem: &P, theta0: &[f64], eta: f64, steps: usize) -> Vec<Vec<f64>> {
    let mut out = vec![theta0.to_vec()];
    for _ in 0..steps {
        let theta = out.last().unwrap();
        let g = problem.gradient(theta);
        out.push(theta.iter().zip(&g).map(|(t, gi)| t - eta * gi).collect());
    }
    out
}

pub fn gaussian_vec(rng: &mut StdRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            scale * g
        })
        .collect()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Diagonal quadratic `1/2 theta^T diag(a) theta - b^T theta`.
pub struct DiagQuadratic {
    pub diag: Vec<f64>,
    pub b: Vec<f64>,
}

impl Problem for DiagQuadratic {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .zip(&self.diag)
            .zip(&self.b)
            .map(|((t, a), b)| 0.5 * a * t * t - b * t)
            .sum()
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.diag).zip(&self.b).map(|((t, a), b)| a * t - b).collect()
    }

    fn optimum(&self) -> Option<&[f64]> {
        None
    }

    fn smoothness(&self) -> Option<f64> {
        self.diag.iter().copied().reduce(f64::max)
    }
}
