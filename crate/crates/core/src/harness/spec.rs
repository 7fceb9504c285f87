use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RnaError};
use crate::extrapolation::RnaConfig;
use crate::optimizers::OptimizerConfig;
use crate::problems::{initial_point, Logistic, Mlp, Problem, Quadratic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        condition: f64,
        seed: u64,
    },
    Logistic {
        n_samples: usize,
        dim: usize,
        l2: f64,
        seed: u64,
    },
    Mlp {
        d_in: usize,
        hidden: usize,
        n_samples: usize,
        seed: u64,
    },
}

impl ProblemSpec {
    /// Default instance for a problem name, as accepted by `--problem`.
    pub fn named(name: &str, seed: u64) -> Result<Self> {
        match name {
            "quadratic" => Ok(ProblemSpec::Quadratic {
                dim: 20,
                condition: 100.0,
                seed,
            }),
            "logistic" => Ok(ProblemSpec::Logistic {
                n_samples: 500,
                dim: 50,
                l2: 1e-3,
                seed,
            }),
            "mlp" => Ok(ProblemSpec::Mlp {
                d_in: 5,
                hidden: 10,
                n_samples: 200,
                seed,
            }),
            other => Err(RnaError::InvalidConfig(format!(
                "unknown problem {other:?} (expected quadratic, logistic or mlp)"
            ))),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Problem>> {
        Ok(match *self {
            ProblemSpec::Quadratic { dim, condition, seed } => Box::new(Quadratic::new(dim, condition, seed)?),
            ProblemSpec::Logistic {
                n_samples,
                dim,
                l2,
                seed,
            } => Box::new(Logistic::new(n_samples, dim, l2, seed)?),
            ProblemSpec::Mlp {
                d_in,
                hidden,
                n_samples,
                seed,
            } => Box::new(Mlp::new(d_in, hidden, n_samples, seed)?),
        })
    }

    pub fn set_seed(&mut self, new_seed: u64) {
        match self {
            ProblemSpec::Quadratic { seed, .. }
            | ProblemSpec::Logistic { seed, .. }
            | ProblemSpec::Mlp { seed, .. } => *seed = new_seed,
        }
    }
}

/// Where the optimizer starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitSpec {
    /// Gaussian entries with standard deviation `scale`.
    Random { scale: f64, seed: u64 },
    /// The problem's known optimum.
    Optimum,
}

impl InitSpec {
    pub fn point(&self, problem: &dyn Problem) -> Result<Vec<f64>> {
        match *self {
            InitSpec::Random { scale, seed } => Ok(initial_point(problem.dim(), seed, scale)),
            InitSpec::Optimum => problem
                .optimum()
                .map(<[f64]>::to_vec)
                .ok_or_else(|| RnaError::InvalidConfig("problem has no known optimum".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub metrics: Option<PathBuf>,
    /// Final extrapolated point, as a one-iterate checkpoint file.
    pub checkpoint: Option<PathBuf>,
}

/// A complete, serializable experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub epochs: usize,
    /// Replace `optimizer.eta` by `1 / L` when the problem reports `L`.
    pub eta_from_smoothness: bool,
    pub flush_on_drop: bool,
    pub problem: ProblemSpec,
    pub init: InitSpec,
    pub optimizer: OptimizerConfig,
    pub rna: RnaConfig,
    pub output: OutputSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            epochs: 100,
            eta_from_smoothness: true,
            flush_on_drop: false,
            problem: ProblemSpec::Quadratic {
                dim: 20,
                condition: 100.0,
                seed: 0,
            },
            init: InitSpec::Random { scale: 1.0, seed: 0 },
            optimizer: OptimizerConfig::gradient_descent(0.1),
            rna: RnaConfig::default(),
            output: OutputSpec {
                metrics: Some(PathBuf::from("metrics.csv")),
                checkpoint: None,
            },
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| RnaError::InvalidConfig(format!("bad experiment file: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| RnaError::InvalidConfig(format!("cannot serialize experiment: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| RnaError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_toml()?).map_err(|e| RnaError::io(path, e))
    }

    /// Applies one seed to problem data, initialization and batch shuffling.
    pub fn set_seed(&mut self, seed: u64) {
        self.problem.set_seed(seed);
        if let InitSpec::Random { seed: s, .. } = &mut self.init {
            *s = seed;
        }
        self.optimizer.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(RnaError::InvalidConfig("epochs must be >= 1".into()));
        }
        self.optimizer.validate()?;
        self.rna.validate()
    }

    /// Optimizer settings with the step size resolved against `problem`.
    pub fn resolved_optimizer(&self, problem: &dyn Problem) -> OptimizerConfig {
        let mut cfg = self.optimizer.clone();
        if self.eta_from_smoothness {
            if let Some(l) = problem.smoothness().filter(|l| *l > 0.0) {
                cfg.eta = 1.0 / l;
            }
        }
        cfg
    }
}
