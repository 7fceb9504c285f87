use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Result, RnaError};
use crate::extrapolation::{
    adaptive_rna_by, residuals_of, rna, window_of, Candidate, IterateSequence, RnaConfig, WeightTarget,
};
use crate::io::{format_scalar, read_checkpoint_path, write_checkpoints, write_metrics, MetricRow, Precision};
use crate::optimizers::{run_with_rna, RunOptions, RunOutput};
use crate::problems::norm;

use super::spec::ExperimentSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;

/// Caps the number of sweep worker threads.
pub const SWEEP_WORKERS_ENV: &str = "RNA_SWEEP_WORKERS";

pub fn exit_code(err: &RnaError) -> i32 {
    match err {
        RnaError::InvalidConfig(_)
        | RnaError::WindowTooSmall { .. }
        | RnaError::DimensionMismatch { .. }
        | RnaError::OrderingViolation { .. } => EXIT_USAGE,
        RnaError::SingularSystem { .. } | RnaError::NumericalFailure(_) | RnaError::DegenerateSum { .. } => {
            EXIT_NUMERICAL
        }
        RnaError::FormatError { .. } => EXIT_FORMAT,
        RnaError::Io { .. } => EXIT_FAILURE,
    }
}

fn report<T>(result: Result<T>) -> i32 {
    match result {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Per-epoch metric rows of a finished run.
pub fn metric_rows(out: &RunOutput) -> Vec<MetricRow> {
    out.vanilla
        .records
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let r = out.rna.get(i);
            MetricRow {
                epoch: v.epoch,
                objective: v.objective,
                grad_norm: v.grad_norm,
                objective_rna: r.map_or(f64::NAN, |r| r.objective),
                grad_norm_rna: r.map_or(f64::NAN, |r| r.grad_norm),
                lambda_used: r.and_then(|r| r.lambda).unwrap_or(f64::NAN),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output: RunOutput,
    pub optimal_value: Option<f64>,
}

impl RunSummary {
    pub fn final_objective(&self) -> f64 {
        self.output.vanilla.records.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn final_objective_rna(&self) -> f64 {
        self.output.rna.last().map_or(f64::NAN, |r| r.objective)
    }

    /// `f(x) - f*`, or `f(x)` when no optimum is known.
    fn gap(&self, f: f64) -> f64 {
        self.optimal_value.map_or(f, |fstar| f - fstar)
    }

    pub fn final_suboptimality(&self) -> f64 {
        self.gap(self.final_objective())
    }

    pub fn final_suboptimality_rna(&self) -> f64 {
        self.gap(self.final_objective_rna())
    }
}

/// Runs an experiment and writes its outputs.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunSummary> {
    spec.validate()?;
    let problem = spec.problem.build()?;
    let theta0 = spec.init.point(problem.as_ref())?;
    let opt = spec.resolved_optimizer(problem.as_ref());
    let output = run_with_rna(
        problem.as_ref(),
        &theta0,
        &opt,
        Some(&spec.rna),
        spec.epochs,
        RunOptions {
            flush_on_drop: spec.flush_on_drop,
        },
    )?;
    if let Some(path) = &spec.output.metrics {
        write_metrics(path, &metric_rows(&output))?;
    }
    if let Some(path) = &spec.output.checkpoint {
        let last = output.rna.last().expect("epochs >= 1");
        write_checkpoints(path, &IterateSequence::new(vec![last.theta.clone()])?, Precision::F64)?;
    }
    Ok(RunSummary {
        optimal_value: problem.optimal_value(),
        output,
    })
}

pub fn cmd_run(spec: &ExperimentSpec) -> i32 {
    report(run_experiment(spec).map(|summary| {
        println!(
            "epochs={} final_objective={} final_objective_rna={}",
            summary.output.vanilla.records.len(),
            format_scalar(summary.final_objective()),
            format_scalar(summary.final_objective_rna())
        );
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelerateArgs {
    pub input: PathBuf,
    pub window: usize,
    pub lambda: f64,
    pub lambda_grid: Option<Vec<f64>>,
    /// One objective value per stored checkpoint.
    pub scores: Option<PathBuf>,
    pub target: WeightTarget,
    pub out: PathBuf,
    pub precision: Precision,
}

impl AccelerateArgs {
    pub fn new(input: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            window: crate::extrapolation::DEFAULT_WINDOW,
            lambda: crate::extrapolation::DEFAULT_LAMBDA,
            lambda_grid: None,
            scores: None,
            target: WeightTarget::LatestK,
            out: out.into(),
            precision: Precision::F64,
        }
    }

    fn rna_config(&self) -> RnaConfig {
        RnaConfig {
            window: self.window,
            lambda: self.lambda,
            lambda_grid: self.lambda_grid.clone(),
            weight_target: self.target,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelerateReport {
    pub theta: Vec<f64>,
    /// `None` when adaptive selection kept the last iterate.
    pub lambda: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
    /// Iterates actually used (at most `window + 1`).
    pub used: usize,
    pub window_shrunk: bool,
}

fn read_scores(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| RnaError::io(path, e))?;
    let scores = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| RnaError::format(path, format!("bad score {t:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if scores.len() != expected {
        return Err(RnaError::format(
            path,
            format!("{} scores for {} checkpoints", scores.len(), expected),
        ));
    }
    Ok(scores)
}

/// Offline acceleration of a stored checkpoint sequence.
///
/// With a lambda grid, candidates are ranked by the affine combination of the
/// supplied per-checkpoint scores when a score file is given, otherwise by the
/// linearized gradient proxy `|R c|`. The last iterate always competes.
pub fn accelerate(args: &AccelerateArgs) -> Result<AccelerateReport> {
    let seq = read_checkpoint_path(&args.input)?;
    let cfg = args.rna_config();
    cfg.validate()?;
    if seq.len() < 2 {
        return Err(RnaError::WindowTooSmall {
            needed: 2,
            got: seq.len(),
        });
    }
    let window_shrunk = seq.len() < cfg.window + 1;
    let used = seq.len().min(cfg.window + 1);

    let scores = match &args.scores {
        Some(path) => Some(read_scores(path, seq.len())?),
        None => None,
    };
    if scores.is_some() && cfg.lambda_grid.is_none() {
        return Err(RnaError::InvalidConfig("a score file needs --lambda-grid".into()));
    }

    if cfg.lambda_grid.is_none() {
        let out = rna(&seq, &cfg)?;
        return Ok(AccelerateReport {
            theta: out.theta,
            lambda: Some(out.coefficients.lambda_used),
            coefficients: Some(out.coefficients.weights),
            used,
            window_shrunk,
        });
    }

    let window = window_of(&seq, &cfg);
    let k = window.len() - 1;
    let residuals = residuals_of(window)?;
    // Per-checkpoint scores of the window and of the weighted iterates.
    let scored = scores.map(|s| {
        let tail = s[s.len() - window.len()..].to_vec();
        let weighted = match cfg.weight_target {
            WeightTarget::LatestK => tail[1..].to_vec(),
            WeightTarget::OldestK => tail[..k].to_vec(),
        };
        (tail[k], weighted)
    });
    let scorer = |cand: &Candidate<'_>| -> f64 {
        match (cand.coefficients, &scored) {
            (Some(c), Some((_, weighted))) => weighted.iter().zip(&c.weights).map(|(a, b)| a * b).sum(),
            (Some(c), None) => norm(&residuals.apply(&c.weights)),
            (None, Some((last, _))) => *last,
            (None, None) => norm(residuals.column(k - 1)),
        }
    };
    let out = adaptive_rna_by(&seq, &cfg, scorer)?;
    Ok(AccelerateReport {
        theta: out.theta,
        lambda: out.lambda,
        coefficients: out.coefficients.map(|c| c.weights),
        used,
        window_shrunk,
    })
}

pub fn cmd_accelerate(args: &AccelerateArgs) -> i32 {
    report(accelerate(args).and_then(|rep| {
        if rep.window_shrunk {
            eprintln!(
                "warning: k = {} needs {} iterates, only {} available; using all of them",
                args.window,
                args.window + 1,
                rep.used
            );
        }
        let mut stdout = std::io::stdout().lock();
        let lambda = rep.lambda.map_or("none (last iterate kept)".to_string(), format_scalar);
        let coefficients = rep.coefficients.as_ref().map_or("none".to_string(), |c| {
            c.iter().map(|v| format_scalar(*v)).collect::<Vec<_>>().join(",")
        });
        let _ = writeln!(stdout, "lambda_used = {lambda}");
        let _ = writeln!(stdout, "coefficients = {coefficients}");
        write_checkpoints(&args.out, &IterateSequence::new(vec![rep.theta])?, args.precision)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub window: usize,
    pub lambda: f64,
    pub metrics: PathBuf,
    /// `Err` holds the diagnostic of a failed cell.
    pub outcome: std::result::Result<SweepResult, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub final_objective_rna: f64,
    pub final_suboptimality_rna: f64,
    pub final_suboptimality: f64,
}

pub const SUMMARY_NAME: &str = "summary.csv";
pub const SUMMARY_HEADER: &str =
    "k,lambda,status,final_objective_rna,final_suboptimality_rna,final_suboptimality,error";

pub fn cell_file_name(window: usize, lambda: f64) -> String {
    format!("metrics_k{window}_lambda{lambda:e}.csv")
}

/// Worker count from `RNA_SWEEP_WORKERS`, if set to a positive integer.
pub fn sweep_workers_from_env() -> Option<usize> {
    std::env::var(SWEEP_WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// Runs every `(K, lambda)` cell of the grid; each writes its own metrics
/// file into `out_dir`, and a summary table is written last.
pub fn sweep(
    spec: &ExperimentSpec,
    windows: &[usize],
    lambdas: &[f64],
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<Vec<SweepCell>> {
    if windows.is_empty() || lambdas.is_empty() {
        return Err(RnaError::InvalidConfig("sweep grids must be nonempty".into()));
    }
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| RnaError::io(out_dir, e))?;

    let grid: Vec<(usize, f64)> = windows
        .iter()
        .flat_map(|&k| lambdas.iter().map(move |&l| (k, l)))
        .collect();
    let run_cell = |&(window, lambda): &(usize, f64)| {
        let metrics = out_dir.join(cell_file_name(window, lambda));
        let mut cell_spec = spec.clone();
        cell_spec.rna = RnaConfig {
            window,
            lambda,
            lambda_grid: None,
            weight_target: spec.rna.weight_target,
        };
        cell_spec.output.metrics = Some(metrics.clone());
        cell_spec.output.checkpoint = None;
        let outcome = run_experiment(&cell_spec)
            .map(|s| SweepResult {
                final_objective_rna: s.final_objective_rna(),
                final_suboptimality_rna: s.final_suboptimality_rna(),
                final_suboptimality: s.final_suboptimality(),
            })
            .map_err(|e| e.to_string());
        SweepCell {
            window,
            lambda,
            metrics,
            outcome,
        }
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| RnaError::InvalidConfig(format!("cannot start sweep workers: {e}")))?;
    let cells: Vec<SweepCell> = pool.install(|| grid.par_iter().map(run_cell).collect());

    let summary = out_dir.join(SUMMARY_NAME);
    fs::write(&summary, render_summary(&cells)).map_err(|e| RnaError::io(&summary, e))?;
    Ok(cells)
}

pub fn render_summary(cells: &[SweepCell]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for c in cells {
        let line = match &c.outcome {
            Ok(r) => format!(
                "{},{},ok,{},{},{},",
                c.window,
                format_scalar(c.lambda),
                format_scalar(r.final_objective_rna),
                format_scalar(r.final_suboptimality_rna),
                format_scalar(r.final_suboptimality)
            ),
            Err(msg) => format!(
                "{},{},failed,NaN,NaN,NaN,\"{}\"",
                c.window,
                format_scalar(c.lambda),
                msg.replace('"', "'")
            ),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn cmd_sweep(spec: &ExperimentSpec, windows: &[usize], lambdas: &[f64], out_dir: &Path) -> i32 {
    match sweep(spec, windows, lambdas, out_dir, sweep_workers_from_env()) {
        Ok(cells) => {
            let ok = cells.iter().filter(|c| c.outcome.is_ok()).count();
            for c in cells.iter().filter(|c| c.outcome.is_err()) {
                eprintln!(
                    "cell k={} lambda={:e} failed: {}",
                    c.window,
                    c.lambda,
                    c.outcome.as_ref().unwrap_err()
                );
            }
            println!("{ok}/{} cells succeeded; summary in {}", cells.len(), out_dir.join(SUMMARY_NAME).display());
            if ok > 0 {
                EXIT_OK
            } else {
                EXIT_NUMERICAL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
