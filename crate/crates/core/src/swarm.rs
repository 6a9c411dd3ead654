//! Global-best particle swarm optimization.
//!
//! Velocity update, inertia-weight form:
//!
//! ```text
//! v' = ω·v + c1·r1∘(p − x) + c2·r2∘(g − x)
//! ```
//!
//! constriction form:
//!
//! ```text
//! v' = χ·(v + φ1·r1∘(p − x) + φ2·r2∘(g − x)),   χ = 2κ / (φ − 2 + √(φ² − 4φ)),  φ = φ1 + φ2
//! ```
//!
//! followed in both cases by a symmetric clamp to `[−v_max, v_max]` and the
//! position step `x' = x + v'`. Positions are not projected onto the bounds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{sample_uniform_position, Bounds, Measure};

/// Fraction of the search range used for `v_max` when it is left on auto.
pub const AUTO_VMAX_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InertiaMode {
    Fixed {
        omega: f64,
    },
    /// ω decreases linearly from `start` at the first iteration to `end` at
    /// `max_iter`.
    Linear {
        start: f64,
        end: f64,
    },
    Constriction {
        kappa: f64,
        phi1: f64,
        phi2: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityLimit {
    Auto,
    Fixed(f64),
}

impl VelocityLimit {
    pub fn resolve(self, bounds: Bounds) -> f64 {
        match self {
            VelocityLimit::Auto => AUTO_VMAX_FRACTION * bounds.width(),
            VelocityLimit::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub swarm_size: usize,
    pub c1: f64,
    pub c2: f64,
    pub inertia: InertiaMode,
    #[serde(with = "crate::config::vmax_serde")]
    pub v_max: VelocityLimit,
    pub max_iter: usize,
    /// Stop once the best true fitness is at or below this value. An
    /// infinite value disables the check.
    #[serde(with = "crate::config::cutoff_serde")]
    pub cutoff_error: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            swarm_size: 50,
            c1: 2.0,
            c2: 2.0,
            inertia: InertiaMode::Linear {
                start: 0.9,
                end: 0.4,
            },
            v_max: VelocityLimit::Auto,
            max_iter: 10_000,
            cutoff_error: 1e-4,
        }
    }
}

impl PsoParams {
    /// Defaults with the constriction update (κ = 1, φ1 = φ2 = 2.05).
    pub fn constricted() -> Self {
        Self {
            inertia: InertiaMode::Constriction {
                kappa: 1.0,
                phi1: 2.05,
                phi2: 2.05,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.swarm_size == 0 {
            return bad("swarm_size must be positive".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if !(self.c1 >= 0.0 && self.c1.is_finite() && self.c2 >= 0.0 && self.c2.is_finite()) {
            return bad(format!(
                "c1, c2 must be finite and non-negative, got {}, {}",
                self.c1, self.c2
            ));
        }
        if let VelocityLimit::Fixed(v) = self.v_max {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("v_max must be positive, got {v}"));
            }
        }
        if self.cutoff_error.is_nan() || self.cutoff_error < 0.0 {
            return bad(format!(
                "cutoff_error must be non-negative, got {}",
                self.cutoff_error
            ));
        }
        match self.inertia {
            InertiaMode::Fixed { omega } if !omega.is_finite() => {
                bad(format!("omega must be finite, got {omega}"))
            }
            InertiaMode::Linear { start, end } if !(start.is_finite() && end.is_finite()) => bad(
                format!("omega schedule must be finite, got {start} -> {end}"),
            ),
            InertiaMode::Constriction { kappa, phi1, phi2 } => {
                constriction_coefficient(kappa, phi1, phi2).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    /// Update rule for the 1-based iteration `k`.
    pub fn update_rule(&self, k: usize) -> Result<UpdateRule> {
        Ok(match self.inertia {
            InertiaMode::Fixed { omega } => UpdateRule::Inertia {
                omega,
                c1: self.c1,
                c2: self.c2,
            },
            InertiaMode::Linear { start, end } => {
                let t = if self.max_iter > 1 {
                    (k.saturating_sub(1)) as f64 / (self.max_iter - 1) as f64
                } else {
                    0.0
                };
                UpdateRule::Inertia {
                    omega: start + (end - start) * t.min(1.0),
                    c1: self.c1,
                    c2: self.c2,
                }
            }
            InertiaMode::Constriction { kappa, phi1, phi2 } => UpdateRule::Constriction {
                chi: constriction_coefficient(kappa, phi1, phi2)?,
                phi1,
                phi2,
            },
        })
    }

    pub(crate) fn cutoff_reached(&self, best: f64) -> bool {
        self.cutoff_error.is_finite() && best <= self.cutoff_error
    }
}

/// Coefficients of one velocity update, with the inertia schedule already
/// evaluated for the current iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateRule {
    Inertia { omega: f64, c1: f64, c2: f64 },
    Constriction { chi: f64, phi1: f64, phi2: f64 },
}

/// Constriction coefficient `2κ / (φ − 2 + √(φ² − 4φ))` with `φ = φ1 + φ2`.
pub fn constriction_coefficient(kappa: f64, phi1: f64, phi2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidParameter(format!(
            "kappa must lie in [0, 1], got {kappa}"
        )));
    }
    let phi = phi1 + phi2;
    if !(phi > 4.0 && phi.is_finite()) {
        return Err(Error::InvalidConstriction { phi });
    }
    Ok(2.0 * kappa / (phi - 2.0 + (phi * phi - 4.0 * phi).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pbest_position: Vec<f64>,
    /// Measurement recorded when `pbest_position` was set.
    pub pbest_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest_index: usize,
    pub gbest_position: Vec<f64>,
    /// Measured (possibly noisy) fitness of `gbest_position`.
    pub gbest_fitness: f64,
    pub best_ever_position: Vec<f64>,
    /// Running minimum of the true fitness of every gbest seen so far.
    pub best_ever_fitness: f64,
    pub iteration: usize,
    /// Resolved velocity limit.
    pub v_max: f64,
}

impl SwarmState {
    /// Re-derives the global best from the personal bests; ties go to the
    /// lowest particle index.
    pub fn select_gbest(&mut self) {
        let mut best = 0;
        for (i, p) in self.particles.iter().enumerate().skip(1) {
            if p.pbest_fitness < self.particles[best].pbest_fitness {
                best = i;
            }
        }
        self.gbest_index = best;
        self.gbest_position
            .clone_from(&self.particles[best].pbest_position);
        self.gbest_fitness = self.particles[best].pbest_fitness;
    }

    /// Folds the true fitness of the current gbest into the best-ever record.
    pub fn record_best_ever<M: Measure + ?Sized>(&mut self, obj: &M) -> Result<()> {
        let value = obj.true_value(&self.gbest_position)?;
        if value < self.best_ever_fitness {
            self.best_ever_fitness = value;
            self.best_ever_position.clone_from(&self.gbest_position);
        }
        Ok(())
    }

    /// Installs `position` (with measurement `fitness`) as the gbest
    /// particle's personal best and as the swarm's global best.
    pub fn replace_gbest(&mut self, position: Vec<f64>, fitness: f64) {
        let p = &mut self.particles[self.gbest_index];
        p.pbest_position.clone_from(&position);
        p.pbest_fitness = fitness;
        self.gbest_position = position;
        self.gbest_fitness = fitness;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIter,
    Cutoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub best_fitness: f64,
    /// Measurements consumed since the start of the run.
    pub eval_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub final_position: Vec<f64>,
    /// Noiseless fitness at `final_position`.
    pub final_true_fitness: f64,
    pub trace: Vec<TracePoint>,
    pub terminated_by: Termination,
    pub total_evals: u64,
    pub seed: Option<u64>,
}

/// Positions uniform in the bounds, zero velocities, personal bests at the
/// starting points. Consumes one measurement per particle.
pub fn init_swarm<M, R>(params: &PsoParams, obj: &mut M, rng: &mut R) -> Result<SwarmState>
where
    M: Measure + ?Sized,
    R: Rng + ?Sized,
{
    params.validate()?;
    let bounds = obj.bounds();
    let dim = obj.dimension();
    let mut particles = Vec::with_capacity(params.swarm_size);
    for _ in 0..params.swarm_size {
        let position = sample_uniform_position(bounds, dim, rng);
        let fitness = obj.measure(&position)?;
        particles.push(Particle {
            velocity: vec![0.0; dim],
            pbest_position: position.clone(),
            pbest_fitness: fitness,
            position,
        });
    }
    let mut state = SwarmState {
        particles,
        gbest_index: 0,
        gbest_position: Vec::new(),
        gbest_fitness: f64::INFINITY,
        best_ever_position: Vec::new(),
        best_ever_fitness: f64::INFINITY,
        iteration: 0,
        v_max: params.v_max.resolve(bounds),
    };
    state.select_gbest();
    state.record_best_ever(obj)?;
    Ok(state)
}

/// New velocity for `p` from explicit random draws `r1`, `r2`.
pub fn velocity_from_draws(
    p: &Particle,
    gbest: &[f64],
    rule: &UpdateRule,
    v_max: f64,
    r1: &[f64],
    r2: &[f64],
) -> Result<Vec<f64>> {
    let dim = p.position.len();
    for len in [
        p.velocity.len(),
        p.pbest_position.len(),
        gbest.len(),
        r1.len(),
        r2.len(),
    ] {
        if len != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: len,
            });
        }
    }
    let v = (0..dim).map(|j| {
        let x = p.position[j];
        let cognitive = r1[j] * (p.pbest_position[j] - x);
        let social = r2[j] * (gbest[j] - x);
        let raw = match *rule {
            UpdateRule::Inertia { omega, c1, c2 } => {
                omega * p.velocity[j] + c1 * cognitive + c2 * social
            }
            UpdateRule::Constriction { chi, phi1, phi2 } => {
                chi * (p.velocity[j] + phi1 * cognitive + phi2 * social)
            }
        };
        raw.clamp(-v_max, v_max)
    });
    Ok(v.collect())
}

/// Draws `r1` then `r2` (each uniform in `[0, 1)`, one per component) and
/// applies [`velocity_from_draws`].
pub fn velocity_update<R: Rng + ?Sized>(
    p: &Particle,
    gbest: &[f64],
    rule: &UpdateRule,
    v_max: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let dim = p.position.len();
    let r1: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
    let r2: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
    velocity_from_draws(p, gbest, rule, v_max, &r1, &r2)
}

pub fn position_update(p: &Particle, velocity: &[f64]) -> Vec<f64> {
    p.position
        .iter()
        .zip(velocity)
        .map(|(x, v)| x + v)
        .collect()
}

/// Measures every particle at its current position, keeps strict
/// improvements as personal bests, re-selects the gbest and updates the
/// best-ever record.
pub fn refresh_bests<M: Measure + ?Sized>(state: &mut SwarmState, obj: &mut M) -> Result<()> {
    for p in &mut state.particles {
        let fitness = obj.measure(&p.position)?;
        if fitness < p.pbest_fitness {
            p.pbest_fitness = fitness;
            p.pbest_position.clone_from(&p.position);
        }
    }
    state.select_gbest();
    state.record_best_ever(obj)
}

/// Extension points of the main loop, used by the hybrids.
pub(crate) trait SwarmHook<M: ?Sized, R: ?Sized> {
    /// After every particle has moved, before the positions are measured.
    fn after_move(&mut self, _state: &mut SwarmState, _obj: &mut M, _rng: &mut R) -> Result<()> {
        Ok(())
    }

    /// After personal and global bests were refreshed.
    fn after_refresh(&mut self, _state: &mut SwarmState, _obj: &mut M, _rng: &mut R) -> Result<()> {
        Ok(())
    }
}

struct NoHook;

impl<M: ?Sized, R: ?Sized> SwarmHook<M, R> for NoHook {}

pub(crate) fn drive<M, R, H>(
    params: &PsoParams,
    obj: &mut M,
    rng: &mut R,
    hook: &mut H,
) -> Result<RunRecord>
where
    M: Measure + ?Sized,
    R: Rng + ?Sized,
    H: SwarmHook<M, R>,
{
    let start_evals = obj.eval_count();
    let mut state = init_swarm(params, obj, rng)?;
    let mut trace = Vec::with_capacity(params.max_iter.min(100_000));
    let mut terminated_by = Termination::MaxIter;

    if params.cutoff_reached(state.best_ever_fitness) {
        terminated_by = Termination::Cutoff;
    } else {
        for k in 1..=params.max_iter {
            let rule = params.update_rule(k)?;
            let v_max = state.v_max;
            let gbest = &state.gbest_position;
            for p in &mut state.particles {
                let v = velocity_update(p, gbest, &rule, v_max, rng)?;
                p.position = position_update(p, &v);
                p.velocity = v;
            }
            hook.after_move(&mut state, obj, rng)?;
            refresh_bests(&mut state, obj)?;
            hook.after_refresh(&mut state, obj, rng)?;
            state.iteration = k;
            trace.push(TracePoint {
                iteration: k,
                best_fitness: state.best_ever_fitness,
                eval_count: obj.eval_count() - start_evals,
            });
            if params.cutoff_reached(state.best_ever_fitness) {
                terminated_by = Termination::Cutoff;
                break;
            }
        }
    }

    Ok(RunRecord {
        final_true_fitness: state.best_ever_fitness,
        final_position: state.best_ever_position,
        trace,
        terminated_by,
        total_evals: obj.eval_count() - start_evals,
        seed: None,
    })
}

/// Basic PSO main loop: refresh bests, check termination, move the swarm,
/// until `max_iter` iterations or the cut-off error is reached.
pub fn run_pso<M, R>(params: &PsoParams, obj: &mut M, rng: &mut R) -> Result<RunRecord>
where
    M: Measure + ?Sized,
    R: Rng + ?Sized,
{
    drive(params, obj, rng, &mut NoHook)
}
