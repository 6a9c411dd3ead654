//! SPSA-PSO hybrids.
//!
//! All three variants run the ordinary swarm loop and add an SPSA
//! refinement of `refine_steps` iterations per swarm iteration (the SPSA
//! index restarts at 0 on every refinement):
//!
//! * [`HybridKind::GbestRefine`]: the gbest is refined and the result
//!   replaces it unconditionally.
//! * [`HybridKind::AgbFgbf`]: an artificial gbest (aGB) is assembled from
//!   the best per-dimension components of the personal bests, refined, and
//!   adopted only if its measurement is strictly better than the gbest's.
//! * [`HybridKind::SwarmRefine`]: after the swarm moves, every particle
//!   (or only the gbest particle, see [`RefineScope`]) is refined in place.
//!
//! Measurements per swarm iteration on top of the `S` refresh measurements:
//! `2n + 1` for the first two variants, `S·(2n + 1)` for the third with
//! [`RefineScope::All`]. With `refine_steps = 0` the hook does nothing and
//! the trajectory is that of plain PSO.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{Measure, Objective};
use crate::spsa::{self, SpsaParams};
use crate::swarm::{self, PsoParams, RunRecord, SwarmHook, SwarmState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HybridKind {
    GbestRefine,
    AgbFgbf,
    SwarmRefine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefineScope {
    #[default]
    All,
    Gbest,
}

impl fmt::Display for RefineScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefineScope::All => "all",
            RefineScope::Gbest => "gbest",
        })
    }
}

impl FromStr for RefineScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(RefineScope::All),
            "gbest" => Ok(RefineScope::Gbest),
            _ => Err(Error::InvalidParameter(format!(
                "refine_scope must be `all` or `gbest`, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridVariant {
    pub kind: HybridKind,
    pub pso: PsoParams,
    pub spsa: SpsaParams,
    /// Only consulted by [`HybridKind::SwarmRefine`].
    #[serde(default)]
    pub refine_scope: RefineScope,
}

impl HybridVariant {
    pub fn validate(&self) -> Result<()> {
        self.pso.validate()?;
        spsa::validate_params(&self.spsa).map_err(|v| Error::InvalidParameter(spsa::join(&v)))
    }

    /// Extra measurements per swarm iteration for a swarm of `swarm_size`.
    pub fn extra_evals_per_iteration(&self) -> u64 {
        let n = self.spsa.refine_steps as u64;
        if n == 0 {
            return 0;
        }
        let per_point = 2 * n + 1;
        match (self.kind, self.refine_scope) {
            (HybridKind::SwarmRefine, RefineScope::All) => self.pso.swarm_size as u64 * per_point,
            _ => per_point,
        }
    }
}

/// Refines the gbest with `refine_steps` SPSA iterations and installs the
/// result as the new gbest (and as the gbest particle's personal best),
/// re-measured once. The best-ever record only takes the new point if its
/// true fitness is lower.
pub fn refine_gbest<M, R>(
    state: &mut SwarmState,
    params: &SpsaParams,
    obj: &mut M,
    rng: &mut R,
) -> Result<()>
where
    M: Measure + ?Sized,
    R: Rng + ?Sized,
{
    if params.refine_steps == 0 {
        return Ok(());
    }
    let theta = spsa::refine(
        state.gbest_position.clone(),
        params.refine_steps,
        params,
        obj,
        rng,
    )?;
    let fitness = obj.measure(&theta)?;
    state.replace_gbest(theta, fitness);
    state.record_best_ever(obj)
}

/// Assembles the artificial gbest: for each dimension, the personal-best
/// component with the lowest dimensional score (scored in the context of
/// its own particle's personal best; ties go to the lowest index).
pub fn form_agb(state: &SwarmState, obj: &Objective) -> Result<Vec<f64>> {
    let dim = state.gbest_position.len();
    let mut agb = Vec::with_capacity(dim);
    for d in 0..dim {
        let mut best = (f64::INFINITY, None);
        for p in &state.particles {
            let component = p.pbest_position[d];
            let score = obj.dimensional_score(d, component, &p.pbest_position)?;
            if best.1.is_none() || score < best.0 {
                best = (score, Some(component));
            }
        }
        agb.push(
            best.1
                .ok_or_else(|| Error::InvalidParameter("empty swarm".into()))?,
        );
    }
    Ok(agb)
}

/// aGB step: form, refine, measure, and adopt only on strict improvement.
/// Returns whether the gbest was replaced.
pub fn agb_step<R: Rng + ?Sized>(
    state: &mut SwarmState,
    params: &SpsaParams,
    obj: &mut Objective,
    rng: &mut R,
) -> Result<bool> {
    if params.refine_steps == 0 {
        return Ok(false);
    }
    let agb = form_agb(state, obj)?;
    let theta = spsa::refine(agb, params.refine_steps, params, obj, rng)?;
    let fitness = obj.measure(&theta)?;
    if fitness < state.gbest_fitness {
        state.replace_gbest(theta, fitness);
        state.record_best_ever(obj)?;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Moves each selected particle by `refine_steps` SPSA iterations, in
/// particle-index order, re-measures it and keeps the new position as its
/// personal best on strict improvement.
pub fn refine_particles<M, R>(
    state: &mut SwarmState,
    params: &SpsaParams,
    scope: RefineScope,
    obj: &mut M,
    rng: &mut R,
) -> Result<()>
where
    M: Measure + ?Sized,
    R: Rng + ?Sized,
{
    if params.refine_steps == 0 {
        return Ok(());
    }
    let targets = match scope {
        RefineScope::All => 0..state.particles.len(),
        RefineScope::Gbest => state.gbest_index..state.gbest_index + 1,
    };
    for i in targets {
        let p = &mut state.particles[i];
        let theta = spsa::refine(
            std::mem::take(&mut p.position),
            params.refine_steps,
            params,
            obj,
            rng,
        )?;
        let fitness = obj.measure(&theta)?;
        if fitness < p.pbest_fitness {
            p.pbest_fitness = fitness;
            p.pbest_position.clone_from(&theta);
        }
        p.position = theta;
    }
    Ok(())
}

struct Hook<'a> {
    variant: &'a HybridVariant,
}

impl<R: Rng + ?Sized> SwarmHook<Objective, R> for Hook<'_> {
    fn after_move(
        &mut self,
        state: &mut SwarmState,
        obj: &mut Objective,
        rng: &mut R,
    ) -> Result<()> {
        match self.variant.kind {
            HybridKind::SwarmRefine => refine_particles(
                state,
                &self.variant.spsa,
                self.variant.refine_scope,
                obj,
                rng,
            ),
            _ => Ok(()),
        }
    }

    fn after_refresh(
        &mut self,
        state: &mut SwarmState,
        obj: &mut Objective,
        rng: &mut R,
    ) -> Result<()> {
        match self.variant.kind {
            HybridKind::GbestRefine => refine_gbest(state, &self.variant.spsa, obj, rng),
            HybridKind::AgbFgbf => agb_step(state, &self.variant.spsa, obj, rng).map(|_| ()),
            HybridKind::SwarmRefine => Ok(()),
        }
    }
}

/// Runs the swarm loop of `variant.pso` with the variant's SPSA refinement.
pub fn run_hybrid<R: Rng + ?Sized>(
    variant: &HybridVariant,
    obj: &mut Objective,
    rng: &mut R,
) -> Result<RunRecord> {
    variant.validate()?;
    swarm::drive(&variant.pso, obj, rng, &mut Hook { variant })
}
