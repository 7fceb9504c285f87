//! Baseline optimizers whose iterate streams feed the extrapolation.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::buffer::SlidingBuffer;
use crate::error::{Result, RnaError};
use crate::extrapolation::{adaptive_rna, rna, RnaConfig};
use crate::problems::{norm, Problem};

/// Runs abort once `|theta|` exceeds this.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub eta: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// `(epoch, multiplier)` pairs; from `epoch` on the step is multiplied.
    pub schedule: Vec<(i64, f64)>,
    /// `None` takes one full-gradient step per epoch.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            momentum: 0.9,
            weight_decay: 1e-5,
            schedule: Vec::new(),
            batch_size: None,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    /// Plain full-batch gradient descent with step `eta`.
    pub fn gradient_descent(eta: f64) -> Self {
        Self {
            eta,
            momentum: 0.0,
            weight_decay: 0.0,
            ..Self::default()
        }
    }

    /// Drops the step by `factor` at each listed epoch.
    pub fn with_step_drops(mut self, epochs: &[i64], factor: f64) -> Self {
        self.schedule = epochs.iter().map(|&e| (e, factor)).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RnaError::InvalidConfig(m));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be finite and > 0, got {}", self.eta));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight decay must be >= 0, got {}", self.weight_decay));
        }
        if self.schedule.windows(2).any(|w| w[0].0 >= w[1].0) {
            return bad("schedule epochs must be strictly increasing".into());
        }
        if self.schedule.iter().any(|(_, m)| !(*m > 0.0 && m.is_finite())) {
            return bad("schedule multipliers must be finite and > 0".into());
        }
        if self.batch_size == Some(0) {
            return bad("batch size must be >= 1".into());
        }
        Ok(())
    }

    /// Step size in effect during `epoch`.
    pub fn eta_at(&self, epoch: i64) -> f64 {
        self.schedule
            .iter()
            .take_while(|(e, _)| *e <= epoch)
            .fold(self.eta, |eta, (_, m)| eta * m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: i64,
    pub theta: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerTrace {
    pub records: Vec<EpochRecord>,
}

/// Extrapolated point recorded alongside an epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct RnaRecord {
    pub epoch: i64,
    pub theta: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    /// `None` when the last iterate was kept.
    pub lambda: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
}

impl RnaRecord {
    pub fn is_fallback(&self) -> bool {
        self.lambda.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Empty the window whenever the step size changes.
    pub flush_on_drop: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub vanilla: OptimizerTrace,
    /// Empty when the run had no extrapolation configured.
    pub rna: Vec<RnaRecord>,
}

/// `theta - eta * grad f(theta)`.
pub fn gd_step<P: Problem + ?Sized>(theta: &[f64], problem: &P, eta: f64) -> Result<Vec<f64>> {
    if !(eta > 0.0) {
        return Err(RnaError::InvalidConfig(format!("eta must be > 0, got {eta}")));
    }
    let g = problem.gradient(theta);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(RnaError::NumericalFailure("non-finite gradient".into()));
    }
    Ok(theta.iter().zip(&g).map(|(t, gi)| t - eta * gi).collect())
}

/// One pass of heavy-ball SGD with weight decay folded into the gradient:
/// `v <- momentum v + (g + weight_decay theta)`, `theta <- theta - eta(epoch) v`.
pub fn sgd_momentum_epoch<P: Problem + ?Sized>(
    theta: &[f64],
    velocity: &[f64],
    problem: &P,
    cfg: &OptimizerConfig,
    epoch: i64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let eta = cfg.eta_at(epoch);
    let mut theta = theta.to_vec();
    let mut velocity = velocity.to_vec();
    let n = problem.n_samples();

    match cfg.batch_size {
        Some(bs) if n > 0 => {
            if bs > n {
                return Err(RnaError::InvalidConfig(format!(
                    "batch size {bs} exceeds the {n} available samples"
                )));
            }
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = StdRng::seed_from_u64(cfg.seed ^ (epoch as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            order.shuffle(&mut rng);
            for batch in order.chunks(bs) {
                let g = problem.batch_gradient(&theta, batch);
                momentum_update(&mut theta, &mut velocity, &g, cfg, eta);
            }
        }
        _ => {
            let g = problem.gradient(&theta);
            momentum_update(&mut theta, &mut velocity, &g, cfg, eta);
        }
    }

    if theta.iter().any(|v| !v.is_finite()) || norm(&theta) > DIVERGENCE_NORM {
        return Err(RnaError::NumericalFailure(format!("optimizer diverged at epoch {epoch}")));
    }
    Ok((theta, velocity))
}

fn momentum_update(theta: &mut [f64], velocity: &mut [f64], g: &[f64], cfg: &OptimizerConfig, eta: f64) {
    for ((t, v), gi) in theta.iter_mut().zip(velocity.iter_mut()).zip(g) {
        *v = cfg.momentum * *v + (gi + cfg.weight_decay * *t);
        *t -= eta * *v;
    }
}

/// Trains for `epochs` passes and, when `rna_cfg` is given, extrapolates the
/// sliding window of snapshots after every epoch without feeding the result
/// back into the optimizer.
///
/// The window holds `theta_0` (tagged epoch 0) and every end-of-epoch snapshot,
/// capped at `window + 1` entries. With a lambda grid the extrapolation is
/// chosen by objective value, the last iterate included.
pub fn run_with_rna<P: Problem + ?Sized>(
    problem: &P,
    theta0: &[f64],
    opt_cfg: &OptimizerConfig,
    rna_cfg: Option<&RnaConfig>,
    epochs: usize,
    options: RunOptions,
) -> Result<RunOutput> {
    opt_cfg.validate()?;
    if epochs == 0 {
        return Err(RnaError::InvalidConfig("epochs must be >= 1".into()));
    }
    if theta0.len() != problem.dim() {
        return Err(RnaError::DimensionMismatch {
            expected: problem.dim(),
            got: theta0.len(),
        });
    }
    let mut buffer = match rna_cfg {
        Some(cfg) => {
            cfg.validate()?;
            let mut b = SlidingBuffer::new(cfg.window + 1)?;
            b.push(0, theta0.to_vec())?;
            Some(b)
        }
        None => None,
    };

    let mut theta = theta0.to_vec();
    let mut velocity = vec![0.0; theta.len()];
    let mut vanilla = OptimizerTrace::default();
    let mut accelerated = Vec::new();
    let mut prev_eta = opt_cfg.eta_at(0);

    for epoch in 1..=epochs as i64 {
        let eta = opt_cfg.eta_at(epoch);
        if let Some(buf) = buffer.as_mut() {
            if options.flush_on_drop && eta != prev_eta {
                buf.clear();
                buf.push(epoch - 1, theta.clone())?;
            }
        }
        prev_eta = eta;

        let (next, next_v) = sgd_momentum_epoch(&theta, &velocity, problem, opt_cfg, epoch)?;
        theta = next;
        velocity = next_v;
        let objective = problem.value(&theta);
        let grad_norm = norm(&problem.gradient(&theta));
        vanilla.records.push(EpochRecord {
            epoch,
            theta: theta.clone(),
            objective,
            grad_norm,
            eta,
        });

        if let (Some(buf), Some(cfg)) = (buffer.as_mut(), rna_cfg) {
            buf.push(epoch, theta.clone())?;
            let window = buf.snapshot()?;
            let (theta_hat, lambda, coefficients) = if cfg.lambda_grid.is_some() {
                let out = adaptive_rna(&window, cfg, |t| problem.value(t))?;
                (out.theta, out.lambda, out.coefficients.map(|c| c.weights))
            } else {
                match rna(&window, cfg) {
                    Ok(out) => (
                        out.theta,
                        Some(out.coefficients.lambda_used),
                        Some(out.coefficients.weights),
                    ),
                    Err(RnaError::DegenerateSum { .. }) => (theta.clone(), None, None),
                    Err(e) => return Err(e),
                }
            };
            let (objective, grad_norm) = if lambda.is_none() {
                (objective, grad_norm)
            } else {
                (problem.value(&theta_hat), norm(&problem.gradient(&theta_hat)))
            };
            accelerated.push(RnaRecord {
                epoch,
                theta: theta_hat,
                objective,
                grad_norm,
                lambda,
                coefficients,
            });
        }
    }

    Ok(RunOutput {
        vanilla,
        rna: accelerated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{initial_point, Logistic, Quadratic};

    #[test]
    fn scalar_contraction() {
        let q = Quadratic::new(1, 1.0, 0).unwrap();
        // f = 0.5 t^2 - b t, so use theta relative to b
        let b = q.rhs()[0];
        let next = gd_step(&[1.0 + b], &q, 0.1).unwrap();
        assert!((next[0] - (0.9 + b)).abs() < 1e-15);
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let q = Quadratic::new(4, 10.0, 1).unwrap();
        let star = q.optimum().unwrap().to_vec();
        let next = gd_step(&star, &q, 0.05).unwrap();
        for (a, b) in next.iter().zip(&star) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn step_is_minus_eta_gradient() {
        let q = Quadratic::new(5, 20.0, 3).unwrap();
        let theta = initial_point(5, 2, 1.0);
        let eta = 0.03;
        let next = gd_step(&theta, &q, eta).unwrap();
        let g = q.gradient(&theta);
        for i in 0..5 {
            assert_eq!(next[i], theta[i] - eta * g[i]);
        }
    }

    #[test]
    fn full_batch_without_momentum_is_gd() {
        let q = Quadratic::new(6, 30.0, 4).unwrap();
        let cfg = OptimizerConfig::gradient_descent(0.02);
        let mut theta = initial_point(6, 0, 1.0);
        let mut v = vec![0.0; 6];
        for epoch in 1..=10 {
            let expect = gd_step(&theta, &q, 0.02).unwrap();
            let (t, nv) = sgd_momentum_epoch(&theta, &v, &q, &cfg, epoch).unwrap();
            assert_eq!(t, expect);
            theta = t;
            v = nv;
        }

        // Same on a finite-sum problem with one batch covering everything is not
        // bit-identical (summation order), but full-batch mode is.
        let p = Logistic::new(40, 3, 0.01, 0).unwrap();
        let theta = initial_point(3, 1, 1.0);
        let (t, _) = sgd_momentum_epoch(&theta, &[0.0; 3], &p, &OptimizerConfig::gradient_descent(0.5), 1).unwrap();
        assert_eq!(t, gd_step(&theta, &p, 0.5).unwrap());
    }

    #[test]
    fn step_drop_schedule() {
        let cfg = OptimizerConfig {
            eta: 0.1,
            ..OptimizerConfig::default()
        }
        .with_step_drops(&[150, 250], 0.1);
        assert_eq!(cfg.eta_at(149), 0.1);
        assert!((cfg.eta_at(150) - 0.01).abs() < 1e-17);
        assert!((cfg.eta_at(250) - 0.001).abs() < 1e-18);
        let mut prev = cfg.eta_at(0);
        for e in 1..400 {
            let cur = cfg.eta_at(e);
            assert!(cur <= prev);
            if cur != prev {
                assert!(e == 150 || e == 250);
            }
            prev = cur;
        }
    }

    #[test]
    fn stochastic_runs_are_deterministic() {
        let p = Logistic::new(64, 5, 1e-3, 2).unwrap();
        let cfg = OptimizerConfig {
            eta: 0.05,
            batch_size: Some(8),
            seed: 17,
            ..OptimizerConfig::default()
        };
        let theta0 = initial_point(5, 0, 0.5);
        let a = run_with_rna(&p, &theta0, &cfg, None, 5, RunOptions::default()).unwrap();
        let b = run_with_rna(&p, &theta0, &cfg, None, 5, RunOptions::default()).unwrap();
        assert_eq!(a, b);
        let other = OptimizerConfig { seed: 18, ..cfg.clone() };
        let c = run_with_rna(&p, &theta0, &other, None, 5, RunOptions::default()).unwrap();
        assert_ne!(a.vanilla.records[4].theta, c.vanilla.records[4].theta);
    }

    #[test]
    fn batch_larger_than_data_rejected() {
        let p = Logistic::new(4, 2, 0.0, 0).unwrap();
        let cfg = OptimizerConfig {
            batch_size: Some(5),
            ..OptimizerConfig::default()
        };
        assert!(sgd_momentum_epoch(&[0.0; 2], &[0.0; 2], &p, &cfg, 1).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let q = Quadratic::new(2, 10.0, 0).unwrap();
        let cfg = OptimizerConfig::gradient_descent(1.0);
        let err = run_with_rna(&q, &[1.0, 1.0], &cfg, None, 200, RunOptions::default()).unwrap_err();
        assert!(matches!(err, RnaError::NumericalFailure(_)));
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let mut c = OptimizerConfig::default();
        c.eta = 0.0;
        assert!(c.validate().is_err());
        let mut c = OptimizerConfig::default();
        c.momentum = 1.0;
        assert!(c.validate().is_err());
        let c = OptimizerConfig::default().with_step_drops(&[5, 5], 0.1);
        assert!(c.validate().is_err());
        let c = OptimizerConfig::default().with_step_drops(&[5], 0.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_epoch_rna_equals_vanilla() {
        let q = Quadratic::new(3, 5.0, 0).unwrap();
        let cfg = OptimizerConfig::gradient_descent(0.1);
        let out = run_with_rna(&q, &initial_point(3, 0, 1.0), &cfg, Some(&RnaConfig::default()), 1, RunOptions::default())
            .unwrap();
        assert_eq!(out.rna.len(), 1);
        assert_eq!(out.rna[0].theta, out.vanilla.records[0].theta);
        assert_eq!(out.rna[0].objective, out.vanilla.records[0].objective);
    }

    #[test]
    fn start_at_optimum_stays_flat() {
        let q = Quadratic::new(4, 10.0, 2).unwrap();
        let star = q.optimum().unwrap().to_vec();
        let fstar = q.value(&star);
        let cfg = OptimizerConfig::gradient_descent(0.1);
        let out = run_with_rna(&q, &star, &cfg, Some(&RnaConfig::default()), 15, RunOptions::default()).unwrap();
        for (v, r) in out.vanilla.records.iter().zip(&out.rna) {
            assert!((v.objective - fstar).abs() <= 1e-14 * fstar.abs().max(1.0));
            assert!((r.objective - fstar).abs() <= 1e-14 * fstar.abs().max(1.0));
        }
    }

    #[test]
    fn flush_on_drop_resets_window() {
        let q = Quadratic::new(5, 20.0, 1).unwrap();
        let cfg = OptimizerConfig::gradient_descent(0.04).with_step_drops(&[6], 0.5);
        let theta0 = initial_point(5, 1, 1.0);
        let rcfg = RnaConfig::new(4, 1e-8);
        let kept = run_with_rna(&q, &theta0, &cfg, Some(&rcfg), 8, RunOptions::default()).unwrap();
        let flushed = run_with_rna(&q, &theta0, &cfg, Some(&rcfg), 8, RunOptions { flush_on_drop: true }).unwrap();
        assert_eq!(kept.vanilla, flushed.vanilla);
        // Before the drop both agree; at the drop the flushed window has 2 entries.
        assert_eq!(kept.rna[4], flushed.rna[4]);
        assert_eq!(flushed.rna[5].coefficients.as_ref().unwrap().len(), 1);
        assert_eq!(kept.rna[5].coefficients.as_ref().unwrap().len(), 4);
    }
}
