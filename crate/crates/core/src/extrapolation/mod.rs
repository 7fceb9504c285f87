//! Regularized nonlinear acceleration of an iterate window.
//!
//! Given iterates `x_0, ..., x_K`, the residual matrix `R = [x_1 - x_0, ..., x_K - x_{K-1}]`
//! is formed, the ridge system `(R^T R + lambda I) z = 1` is solved, and the normalized
//! weights `c = z / sum(z)` produce the affine combination `sum_k c_k x_k`.
//!
//! Every function here is a pure function of its inputs.

mod adaptive;
mod solve;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RnaError};

pub use adaptive::{adaptive_rna, adaptive_rna_by, AdaptiveOutput, Candidate};
pub use solve::solve_regularized;

/// Default window size `K` (the number of residuals per extrapolation).
pub const DEFAULT_WINDOW: usize = 10;
/// Default ridge parameter.
pub const DEFAULT_LAMBDA: f64 = 1e-8;

/// Relative threshold below which `sum(z)` is treated as zero.
const DEGENERATE_SUM_RTOL: f64 = 1e-12;

/// An ordered window of parameter vectors, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateSequence {
    dim: usize,
    iterates: Vec<Vec<f64>>,
}

impl IterateSequence {
    /// Builds a sequence, checking that every vector has the same length and
    /// only finite entries.
    pub fn new(iterates: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match iterates.first() {
            Some(first) => first.len(),
            None => return Err(RnaError::WindowTooSmall { needed: 1, got: 0 }),
        };
        if dim == 0 {
            return Err(RnaError::InvalidConfig("iterates must have dimension >= 1".into()));
        }
        for (k, theta) in iterates.iter().enumerate() {
            if theta.len() != dim {
                return Err(RnaError::DimensionMismatch {
                    expected: dim,
                    got: theta.len(),
                });
            }
            if let Some(i) = theta.iter().position(|v| !v.is_finite()) {
                return Err(RnaError::NumericalFailure(format!(
                    "iterate {k} has a non-finite entry at index {i}"
                )));
            }
        }
        Ok(Self { dim, iterates })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn iterates(&self) -> &[Vec<f64>] {
        &self.iterates
    }

    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("sequence is never empty")
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.iterates
    }

    /// The last `n` iterates (or all of them when fewer are stored).
    pub fn tail(&self, n: usize) -> IterateSequence {
        let start = self.iterates.len().saturating_sub(n.max(1));
        IterateSequence {
            dim: self.dim,
            iterates: self.iterates[start..].to_vec(),
        }
    }
}

/// Consecutive differences of an iterate window, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMatrix {
    dim: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ResidualMatrix {
    /// Builds a matrix from explicit columns. Mostly useful for tests and
    /// callers that already hold residuals.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let dim = columns.first().map(Vec::len).unwrap_or(0);
        if columns.is_empty() || dim == 0 {
            return Err(RnaError::WindowTooSmall { needed: 2, got: columns.len() + 1 });
        }
        let mut data = Vec::with_capacity(dim * columns.len());
        for col in columns {
            if col.len() != dim {
                return Err(RnaError::DimensionMismatch {
                    expected: dim,
                    got: col.len(),
                });
            }
            data.extend_from_slice(col);
        }
        Ok(Self {
            dim,
            cols: columns.len(),
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Returns a copy with every entry multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `trace(R^T R)`, the squared Frobenius norm.
    pub fn gram_trace(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Dense `K x K` Gram matrix `R^T R`, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.cols;
        let mut g = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let v = dot(self.column(i), self.column(j));
                g[i * k + j] = v;
                g[j * k + i] = v;
            }
        }
        g
    }

    /// `R c` for a coefficient vector of length `K`.
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        assert_eq!(c.len(), self.cols);
        let mut out = vec![0.0; self.dim];
        for (col, &ck) in self.columns().zip(c) {
            axpy(ck, col, &mut out);
        }
        out
    }
}

/// Which `K` of the `K + 1` iterates the coefficients weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightTarget {
    /// `x_1 .. x_K`: residual `k` is paired with the iterate it leads to.
    #[default]
    LatestK,
    /// `x_0 .. x_{K-1}`: residual `k` is paired with the iterate it starts from.
    OldestK,
}

/// Normalized extrapolation weights together with the solve that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationCoefficients {
    pub weights: Vec<f64>,
    pub lambda_used: f64,
    pub raw_solution: Vec<f64>,
}

impl ExtrapolationCoefficients {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RnaConfig {
    /// Number of residuals `K`; up to `K + 1` iterates enter each extrapolation.
    pub window: usize,
    pub lambda: f64,
    pub lambda_grid: Option<Vec<f64>>,
    pub weight_target: WeightTarget,
}

impl Default for RnaConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            lambda: DEFAULT_LAMBDA,
            lambda_grid: None,
            weight_target: WeightTarget::LatestK,
        }
    }
}

impl RnaConfig {
    pub fn new(window: usize, lambda: f64) -> Self {
        Self {
            window,
            lambda,
            ..Self::default()
        }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.lambda_grid = Some(grid);
        self
    }

    pub fn with_target(mut self, target: WeightTarget) -> Self {
        self.weight_target = target;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(RnaError::InvalidConfig("window must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(RnaError::InvalidConfig(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() {
                return Err(RnaError::InvalidConfig("lambda grid is empty".into()));
            }
            if grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(RnaError::InvalidConfig(
                    "lambda grid entries must be finite and > 0".into(),
                ));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(RnaError::InvalidConfig(
                    "lambda grid must be strictly ascending".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Result of one extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct RnaOutput {
    pub theta: Vec<f64>,
    pub coefficients: ExtrapolationCoefficients,
}

/// Residual matrix of consecutive differences `x_{k+1} - x_k`.
pub fn build_residuals(seq: &IterateSequence) -> Result<ResidualMatrix> {
    residuals_of(seq.iterates())
}

pub(crate) fn residuals_of(iterates: &[Vec<f64>]) -> Result<ResidualMatrix> {
    if iterates.len() < 2 {
        return Err(RnaError::WindowTooSmall {
            needed: 2,
            got: iterates.len(),
        });
    }
    let dim = iterates[0].len();
    let cols = iterates.len() - 1;
    let mut data = Vec::with_capacity(dim * cols);
    for pair in iterates.windows(2) {
        if pair[1].len() != dim {
            return Err(RnaError::DimensionMismatch {
                expected: dim,
                got: pair[1].len(),
            });
        }
        data.extend(pair[1].iter().zip(&pair[0]).map(|(next, prev)| next - prev));
    }
    Ok(ResidualMatrix { dim, cols, data })
}

/// Rescales `z` to unit sum.
pub fn normalize(z: &[f64], lambda_used: f64) -> Result<ExtrapolationCoefficients> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(RnaError::NumericalFailure(
            "raw solution has non-finite entries".into(),
        ));
    }
    let sum: f64 = z.iter().sum();
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    if !(sum.abs() >= DEGENERATE_SUM_RTOL * l1) || l1 == 0.0 {
        return Err(RnaError::DegenerateSum { sum, l1 });
    }
    let weights = z.iter().map(|v| v / sum).collect();
    Ok(ExtrapolationCoefficients {
        weights,
        lambda_used,
        raw_solution: z.to_vec(),
    })
}

/// Affine combination of the iterates selected by `target`.
pub fn extrapolate(
    seq: &IterateSequence,
    coefficients: &ExtrapolationCoefficients,
    target: WeightTarget,
) -> Result<Vec<f64>> {
    combine(seq.iterates(), &coefficients.weights, target)
}

pub(crate) fn combine(iterates: &[Vec<f64>], weights: &[f64], target: WeightTarget) -> Result<Vec<f64>> {
    if iterates.len() != weights.len() + 1 {
        return Err(RnaError::DimensionMismatch {
            expected: iterates.len().saturating_sub(1),
            got: weights.len(),
        });
    }
    let selected = match target {
        WeightTarget::LatestK => &iterates[1..],
        WeightTarget::OldestK => &iterates[..iterates.len() - 1],
    };
    let mut out = vec![0.0; iterates[0].len()];
    for (theta, &c) in selected.iter().zip(weights) {
        axpy(c, theta, &mut out);
    }
    Ok(out)
}

/// Full extrapolation on the last `cfg.window + 1` iterates of `seq`, using
/// `cfg.lambda`.
pub fn rna(seq: &IterateSequence, cfg: &RnaConfig) -> Result<RnaOutput> {
    cfg.validate()?;
    rna_with_lambda(window_of(seq, cfg), cfg.lambda, cfg.weight_target)
}

pub(crate) fn window_of<'a>(seq: &'a IterateSequence, cfg: &RnaConfig) -> &'a [Vec<f64>] {
    let iterates = seq.iterates();
    let start = iterates.len().saturating_sub(cfg.window + 1);
    &iterates[start..]
}

pub(crate) fn rna_with_lambda(
    window: &[Vec<f64>],
    lambda: f64,
    target: WeightTarget,
) -> Result<RnaOutput> {
    let residuals = residuals_of(window)?;
    let (z, lambda_used) = solve::solve_with_retry(&residuals, lambda)?;
    let coefficients = normalize(&z, lambda_used)?;
    let theta = combine(window, &coefficients.weights, target)?;
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(RnaError::NumericalFailure(
            "extrapolated point has non-finite entries".into(),
        ));
    }
    Ok(RnaOutput {
        theta,
        coefficients,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
