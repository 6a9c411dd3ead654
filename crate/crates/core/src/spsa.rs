//! Simultaneous perturbation stochastic approximation.
//!
//! Each step perturbs every coordinate at once by `±c_k` and estimates the
//! gradient from two measurements:
//!
//! ```text
//! ĝ_i = (y(θ + c_k·Δ) − y(θ − c_k·Δ)) / (2·c_k·Δ_i)
//! θ'  = clamp(θ − a_k·ĝ)
//! a_k = a / (k + 1 + A)^α,   c_k = c / (k + 1)^γ
//! ```

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Measure;
use crate::swarm::{RunRecord, Termination, TracePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpsaParams {
    pub a: f64,
    pub c: f64,
    #[serde(rename = "A")]
    pub stability: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Iterations of a standalone run.
    pub steps: usize,
    /// Iterations per hybrid refinement.
    pub refine_steps: usize,
}

impl Default for SpsaParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            c: 1.0,
            stability: 200.0,
            alpha: 0.602,
            gamma: 0.101,
            steps: 10_000,
            refine_steps: 1,
        }
    }
}

/// Step size `a_k` and perturbation size `c_k` for one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub step: f64,
    pub perturbation: f64,
}

pub fn gains(k: u64, params: &SpsaParams) -> Gains {
    let k = k as f64;
    Gains {
        step: params.a / (k + 1.0 + params.stability).powf(params.alpha),
        perturbation: params.c / (k + 1.0).powf(params.gamma),
    }
}

/// A vector of independent ±1 entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Perturbation(Vec<i8>);

impl Perturbation {
    /// Fails unless every entry is exactly `+1` or `-1`.
    pub fn from_signs(signs: &[f64]) -> Result<Self> {
        signs
            .iter()
            .map(|&s| {
                if s == 1.0 {
                    Ok(1)
                } else if s == -1.0 {
                    Ok(-1)
                } else {
                    Err(Error::InvalidParameter(format!(
                        "perturbation components must be ±1, got {s}"
                    )))
                }
            })
            .collect::<Result<Vec<i8>>>()
            .map(Perturbation)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|&s| f64::from(s))
    }
}

pub fn sample_perturbation<R: Rng + ?Sized>(dimension: usize, rng: &mut R) -> Perturbation {
    Perturbation(
        (0..dimension)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect(),
    )
}

/// Two-sided simultaneous-perturbation gradient estimate. Always consumes
/// exactly two measurements.
pub fn estimate_gradient<M: Measure + ?Sized>(
    obj: &mut M,
    theta: &[f64],
    c_k: f64,
    delta: &Perturbation,
) -> Result<Vec<f64>> {
    if !(c_k > 0.0 && c_k.is_finite()) {
        return Err(Error::InvalidPerturbationSize(c_k));
    }
    if delta.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            actual: delta.len(),
        });
    }
    let plus: Vec<f64> = theta
        .iter()
        .zip(delta.signs())
        .map(|(t, d)| t + c_k * d)
        .collect();
    let minus: Vec<f64> = theta
        .iter()
        .zip(delta.signs())
        .map(|(t, d)| t - c_k * d)
        .collect();
    let diff = obj.measure(&plus)? - obj.measure(&minus)?;
    Ok(delta.signs().map(|d| diff / (2.0 * c_k * d)).collect())
}

/// One SPSA iteration with explicit gains and perturbation.
pub fn spsa_step_with<M: Measure + ?Sized>(
    theta: &[f64],
    gains: Gains,
    delta: &Perturbation,
    obj: &mut M,
) -> Result<Vec<f64>> {
    let g = estimate_gradient(obj, theta, gains.perturbation, delta)?;
    let bounds = obj.bounds();
    Ok(theta
        .iter()
        .zip(&g)
        .map(|(t, gi)| bounds.clamp(t - gains.step * gi))
        .collect())
}

/// One SPSA iteration at index `k` with a fresh Rademacher perturbation.
pub fn spsa_step<M, R>(
    theta: &[f64],
    k: u64,
    params: &SpsaParams,
    obj: &mut M,
    rng: &mut R,
) -> Result<Vec<f64>>
where
    M: Measure + ?Sized,
    R: Rng + ?Sized,
{
    let delta = sample_perturbation(theta.len(), rng);
    spsa_step_with(theta, gains(k, params), &delta, obj)
}

/// Runs `steps` SPSA iterations from `theta`, with the iteration index
/// starting at 0.
pub fn refine<M, R>(
    theta: Vec<f64>,
    steps: usize,
    params: &SpsaParams,
    obj: &mut M,
    rng: &mut R,
) -> Result<Vec<f64>>
where
    M: Measure + ?Sized,
    R: Rng + ?Sized,
{
    (0..steps as u64).try_fold(theta, |t, k| spsa_step(&t, k, params, obj, rng))
}

/// Standalone SPSA run from `theta0`. The record reports the best true
/// fitness seen over all iterates.
pub fn run_spsa<M, R>(
    theta0: &[f64],
    params: &SpsaParams,
    cutoff_error: f64,
    obj: &mut M,
    rng: &mut R,
) -> Result<RunRecord>
where
    M: Measure + ?Sized,
    R: Rng + ?Sized,
{
    if let Err(violations) = validate_params(params) {
        return Err(Error::InvalidParameter(join(&violations)));
    }
    let bounds = obj.bounds();
    if let Some(&v) = theta0.iter().find(|&&v| !bounds.contains(v)) {
        return Err(Error::InvalidParameter(format!(
            "initial point component {v} lies outside [{}, {}]",
            bounds.lower(),
            bounds.upper()
        )));
    }
    let cutoff = |f: f64| cutoff_error.is_finite() && f <= cutoff_error;
    let start_evals = obj.eval_count();

    let mut theta = theta0.to_vec();
    let mut best_fitness = obj.true_value(&theta)?;
    let mut best_position = theta.clone();
    let mut trace = Vec::with_capacity(params.steps.min(100_000));
    let mut terminated_by = Termination::MaxIter;

    if cutoff(best_fitness) {
        terminated_by = Termination::Cutoff;
    } else {
        for k in 0..params.steps {
            theta = spsa_step(&theta, k as u64, params, obj, rng)?;
            let value = obj.true_value(&theta)?;
            if value < best_fitness {
                best_fitness = value;
                best_position.clone_from(&theta);
            }
            trace.push(TracePoint {
                iteration: k + 1,
                best_fitness,
                eval_count: obj.eval_count() - start_evals,
            });
            if cutoff(best_fitness) {
                terminated_by = Termination::Cutoff;
                break;
            }
        }
    }

    Ok(RunRecord {
        final_position: best_position,
        final_true_fitness: best_fitness,
        trace,
        terminated_by,
        total_evals: obj.eval_count() - start_evals,
        seed: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpsaViolation {
    NonPositive {
        name: &'static str,
        value: f64,
    },
    NegativeStability(f64),
    /// Requires `0 < γ < α ≤ 1`.
    ExponentOrder {
        alpha: f64,
        gamma: f64,
    },
    /// Requires `α > 2γ` so that `Σ a_k² / c_k²` converges.
    SummabilityCondition {
        alpha: f64,
        gamma: f64,
    },
    NonFinite {
        name: &'static str,
    },
}

impl fmt::Display for SpsaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpsaViolation::NonPositive { name, value } => {
                write!(f, "{name} must be positive, got {value}")
            }
            SpsaViolation::NegativeStability(v) => write!(f, "A must be non-negative, got {v}"),
            SpsaViolation::ExponentOrder { alpha, gamma } => {
                write!(
                    f,
                    "need 0 < gamma < alpha <= 1, got alpha={alpha}, gamma={gamma}"
                )
            }
            SpsaViolation::SummabilityCondition { alpha, gamma } => {
                write!(f, "need alpha > 2*gamma, got alpha={alpha}, gamma={gamma}")
            }
            SpsaViolation::NonFinite { name } => write!(f, "{name} must be finite"),
        }
    }
}

pub(crate) fn join(violations: &[SpsaViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Checks the sufficient conditions on the gain constants. Every violation
/// is reported.
pub fn validate_params(params: &SpsaParams) -> Result<(), Vec<SpsaViolation>> {
    let mut out = Vec::new();
    let fields = [
        ("a", params.a),
        ("c", params.c),
        ("A", params.stability),
        ("alpha", params.alpha),
        ("gamma", params.gamma),
    ];
    for (name, value) in fields {
        if !value.is_finite() {
            out.push(SpsaViolation::NonFinite { name });
        }
    }
    if !out.is_empty() {
        return Err(out);
    }
    for (name, value) in [("a", params.a), ("c", params.c)] {
        if value <= 0.0 {
            out.push(SpsaViolation::NonPositive { name, value });
        }
    }
    if params.stability < 0.0 {
        out.push(SpsaViolation::NegativeStability(params.stability));
    }
    let (alpha, gamma) = (params.alpha, params.gamma);
    if !(gamma > 0.0 && gamma < alpha && alpha <= 1.0) {
        out.push(SpsaViolation::ExponentOrder { alpha, gamma });
    }
    if alpha <= 2.0 * gamma {
        out.push(SpsaViolation::SummabilityCondition { alpha, gamma });
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
