//! Regularized nonlinear acceleration (RNA) of optimizer iterates.
//!
//! The core entry point is [`rna`]: given a window of successive iterates it
//! returns an affine combination of them whose gradient is approximately
//! minimized. Around it sit a sliding snapshot buffer, a binary checkpoint
//! format, test problems with gradient oracles, baseline optimizers, and the
//! experiment harness used by the `rna` command-line tool.

pub mod buffer;
pub mod error;
pub mod extrapolation;
pub mod harness;
pub mod io;
pub mod optimizers;
pub mod problems;

pub use buffer::SlidingBuffer;
pub use error::{Result, RnaError};
pub use extrapolation::{
    adaptive_rna, adaptive_rna_by, build_residuals, extrapolate, normalize, rna, solve_regularized, AdaptiveOutput,
    Candidate, ExtrapolationCoefficients, IterateSequence, ResidualMatrix, RnaConfig, RnaOutput, WeightTarget,
    DEFAULT_LAMBDA, DEFAULT_WINDOW,
};
pub use optimizers::{gd_step, run_with_rna, sgd_momentum_epoch, OptimizerConfig, OptimizerTrace, RunOptions};
pub use problems::{Logistic, Mlp, Problem, Quadratic};
