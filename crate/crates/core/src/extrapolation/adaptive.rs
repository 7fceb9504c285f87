use crate::error::{Result, RnaError};

use super::{rna_with_lambda, window_of, ExtrapolationCoefficients, IterateSequence, RnaConfig};

/// A point offered to the scoring callback during lambda selection.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub theta: &'a [f64],
    /// `None` for the last-iterate fallback.
    pub lambda: Option<f64>,
    pub coefficients: Option<&'a ExtrapolationCoefficients>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutput {
    pub theta: Vec<f64>,
    /// Ridge of the selected candidate; `None` when the last iterate won.
    pub lambda: Option<f64>,
    pub coefficients: Option<ExtrapolationCoefficients>,
    pub score: f64,
    /// Grid points whose extrapolation failed outright.
    pub failures: usize,
}

impl AdaptiveOutput {
    pub fn is_fallback(&self) -> bool {
        self.lambda.is_none()
    }
}

/// Grid search over `cfg.lambda_grid` scored on the extrapolated point.
///
/// The last iterate is always a candidate, so the returned score never
/// exceeds `score(last iterate)`.
pub fn adaptive_rna<F>(seq: &IterateSequence, cfg: &RnaConfig, score: F) -> Result<AdaptiveOutput>
where
    F: Fn(&[f64]) -> f64,
{
    adaptive_rna_by(seq, cfg, |cand: &Candidate<'_>| score(cand.theta))
}

/// Grid search with a scorer that can also inspect the coefficients.
pub fn adaptive_rna_by<F>(seq: &IterateSequence, cfg: &RnaConfig, mut score: F) -> Result<AdaptiveOutput>
where
    F: FnMut(&Candidate<'_>) -> f64,
{
    cfg.validate()?;
    let grid = cfg
        .lambda_grid
        .as_deref()
        .ok_or_else(|| RnaError::InvalidConfig("adaptive selection needs a lambda grid".into()))?;

    let last = seq.last();
    let fallback_score = score(&Candidate {
        theta: last,
        lambda: None,
        coefficients: None,
    });
    let mut best = AdaptiveOutput {
        theta: last.to_vec(),
        lambda: None,
        coefficients: None,
        score: fallback_score,
        failures: 0,
    };

    let window = window_of(seq, cfg);
    for &lambda in grid {
        let out = match rna_with_lambda(window, lambda, cfg.weight_target) {
            Ok(out) => out,
            Err(_) => {
                best.failures += 1;
                continue;
            }
        };
        let s = score(&Candidate {
            theta: &out.theta,
            lambda: Some(lambda),
            coefficients: Some(&out.coefficients),
        });
        // NaN scores never win; a NaN fallback score loses to any finite one.
        if s < best.score || (best.score.is_nan() && !s.is_nan()) {
            best.theta = out.theta;
            best.lambda = Some(out.coefficients.lambda_used);
            best.coefficients = Some(out.coefficients);
            best.score = s;
        }
    }
    Ok(best)
}
