//! Layered run configuration.
//!
//! Built-in defaults live in `config/defaults.json` (embedded at compile
//! time). A JSON config file and command-line flags are applied on top as
//! [`SettingsOverride`]s, flags last.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{HybridVariant, RefineScope};
use crate::method::MethodId;
use crate::objective::FunctionId;
use crate::spsa::{self, SpsaParams};
use crate::swarm::{InertiaMode, PsoParams, VelocityLimit};

pub const DEFAULTS_JSON: &str = include_str!("../config/defaults.json");

/// SPSA gain numerators for one benchmark function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainPair {
    pub a: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainOverride {
    pub a: Option<f64>,
    pub c: Option<f64>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub swarm_size: usize,
    pub c1: f64,
    pub c2: f64,
    /// Fixed inertia weight; `null` selects the linear schedule.
    pub omega: Option<f64>,
    pub omega_start: f64,
    pub omega_end: f64,
    pub kappa: f64,
    pub phi1: f64,
    pub phi2: f64,
    #[serde(with = "vmax_serde")]
    pub vmax: VelocityLimit,
    pub max_iter: usize,
    #[serde(with = "cutoff_serde")]
    pub cutoff: f64,
    /// Global SPSA `a`, overriding the per-function table when set.
    pub a: Option<f64>,
    /// Global SPSA `c`, overriding the per-function table when set.
    pub c: Option<f64>,
    pub spsa_gains: BTreeMap<FunctionId, GainPair>,
    #[serde(rename = "A")]
    pub stability: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Standalone SPSA iterations; `null` means `max_iter`.
    pub steps: Option<usize>,
    pub refine_steps: usize,
    pub refine_scope: RefineScope,
    pub noise_sigma: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        serde_json::from_str(DEFAULTS_JSON).expect("embedded defaults.json is valid")
    }
}

/// A partial configuration; every present field replaces the current value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsOverride {
    pub swarm_size: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub omega: Option<f64>,
    pub omega_start: Option<f64>,
    pub omega_end: Option<f64>,
    pub kappa: Option<f64>,
    pub phi1: Option<f64>,
    pub phi2: Option<f64>,
    #[serde(default, with = "opt_vmax_serde")]
    pub vmax: Option<VelocityLimit>,
    pub max_iter: Option<usize>,
    #[serde(default, with = "opt_cutoff_serde")]
    pub cutoff: Option<f64>,
    pub a: Option<f64>,
    pub c: Option<f64>,
    pub spsa_gains: Option<BTreeMap<FunctionId, GainOverride>>,
    #[serde(rename = "A")]
    pub stability: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub steps: Option<usize>,
    pub refine_steps: Option<usize>,
    pub refine_scope: Option<RefineScope>,
    pub noise_sigma: Option<f64>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
}

impl SettingsOverride {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

macro_rules! take {
    ($dst:expr, $src:expr, $($field:ident),+ $(,)?) => {
        $( if let Some(v) = $src.$field { $dst.$field = v; } )+
    };
}

impl Settings {
    pub fn apply(&mut self, o: &SettingsOverride) {
        take!(
            self,
            o,
            swarm_size,
            c1,
            c2,
            omega_start,
            omega_end,
            kappa,
            phi1,
            phi2,
            vmax,
            max_iter,
            cutoff,
            stability,
            alpha,
            gamma,
            refine_steps,
            refine_scope,
            noise_sigma,
            runs,
            seed,
        );
        if o.omega.is_some() {
            self.omega = o.omega;
        }
        if o.a.is_some() {
            self.a = o.a;
        }
        if o.c.is_some() {
            self.c = o.c;
        }
        if o.steps.is_some() {
            self.steps = o.steps;
        }
        if let Some(gains) = &o.spsa_gains {
            for (f, g) in gains {
                let entry = self
                    .spsa_gains
                    .entry(*f)
                    .or_insert(GainPair { a: 1.0, c: 1.0 });
                if let Some(a) = g.a {
                    entry.a = a;
                }
                if let Some(c) = g.c {
                    entry.c = c;
                }
            }
        }
    }

    pub fn with(mut self, o: &SettingsOverride) -> Self {
        self.apply(o);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("settings serialize")
    }

    pub fn pso_params(&self, constricted: bool) -> PsoParams {
        let inertia = if constricted {
            InertiaMode::Constriction {
                kappa: self.kappa,
                phi1: self.phi1,
                phi2: self.phi2,
            }
        } else if let Some(omega) = self.omega {
            InertiaMode::Fixed { omega }
        } else {
            InertiaMode::Linear {
                start: self.omega_start,
                end: self.omega_end,
            }
        };
        PsoParams {
            swarm_size: self.swarm_size,
            c1: self.c1,
            c2: self.c2,
            inertia,
            v_max: self.vmax,
            max_iter: self.max_iter,
            cutoff_error: self.cutoff,
        }
    }

    pub fn spsa_params(&self, function: FunctionId) -> SpsaParams {
        let table = self.spsa_gains.get(&function).copied();
        SpsaParams {
            a: self.a.or(table.map(|g| g.a)).unwrap_or(1.0),
            c: self.c.or(table.map(|g| g.c)).unwrap_or(1.0),
            stability: self.stability,
            alpha: self.alpha,
            gamma: self.gamma,
            steps: self.steps.unwrap_or(self.max_iter),
            refine_steps: self.refine_steps,
        }
    }

    /// Resolves the parameters of `method` on `function` and validates them.
    pub fn method_params(&self, method: MethodId, function: FunctionId) -> Result<MethodParams> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be positive".into()));
        }
        let params = match (method, method.hybrid_kind()) {
            (MethodId::Spsa, _) => {
                let spsa = self.spsa_params(function);
                spsa::validate_params(&spsa)
                    .map_err(|v| Error::InvalidParameter(spsa::join(&v)))?;
                if self.cutoff.is_nan() || self.cutoff < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "cutoff must be non-negative, got {}",
                        self.cutoff
                    )));
                }
                MethodParams::Spsa {
                    spsa,
                    cutoff_error: self.cutoff,
                }
            }
            (_, Some(kind)) => {
                let variant = HybridVariant {
                    kind,
                    pso: self.pso_params(method.constricted()),
                    spsa: self.spsa_params(function),
                    refine_scope: self.refine_scope,
                };
                variant.validate()?;
                MethodParams::Hybrid(variant)
            }
            (_, None) => {
                let pso = self.pso_params(method.constricted());
                pso.validate()?;
                MethodParams::Pso(pso)
            }
        };
        Ok(params)
    }
}

/// Parameters of one method, ready to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodParams {
    Pso(PsoParams),
    Spsa {
        spsa: SpsaParams,
        #[serde(with = "cutoff_serde")]
        cutoff_error: f64,
    },
    Hybrid(HybridVariant),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrWord {
    Number(f64),
    Word(String),
}

/// `v_max` as a positive number or the word `"auto"`.
pub(crate) mod vmax_serde {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &VelocityLimit, s: S) -> Result<S::Ok, S::Error> {
        match v {
            VelocityLimit::Auto => s.serialize_str("auto"),
            VelocityLimit::Fixed(x) => s.serialize_f64(*x),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<VelocityLimit, D::Error> {
        match NumberOrWord::deserialize(d)? {
            NumberOrWord::Number(x) => Ok(VelocityLimit::Fixed(x)),
            NumberOrWord::Word(w) if w == "auto" => Ok(VelocityLimit::Auto),
            NumberOrWord::Word(w) => Err(de::Error::custom(format!(
                "expected a number or \"auto\", got \"{w}\""
            ))),
        }
    }
}

pub(crate) mod opt_vmax_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<VelocityLimit>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => vmax_serde::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<VelocityLimit>, D::Error> {
        vmax_serde::deserialize(d).map(Some)
    }
}

/// Cut-off error as a number, or `"none"` when disabled (stored as +∞).
pub(crate) mod cutoff_serde {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("none")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match NumberOrWord::deserialize(d)? {
            NumberOrWord::Number(x) => Ok(x),
            NumberOrWord::Word(w) if w == "none" || w == "inf" => Ok(f64::INFINITY),
            NumberOrWord::Word(w) => Err(de::Error::custom(format!(
                "expected a number or \"none\", got \"{w}\""
            ))),
        }
    }
}

pub(crate) mod opt_cutoff_serde {
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => super::cutoff_serde::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        super::cutoff_serde::deserialize(d).map(Some)
    }
}

/// Parses a `v_max` flag value: a positive number or `auto`.
pub fn parse_vmax(s: &str) -> Result<VelocityLimit> {
    if s == "auto" {
        return Ok(VelocityLimit::Auto);
    }
    s.parse::<f64>()
        .map(VelocityLimit::Fixed)
        .map_err(|_| Error::InvalidParameter(format!("vmax must be a number or `auto`, got `{s}`")))
}

/// Parses a cut-off flag value: a number, or `none`/`inf` to disable.
pub fn parse_cutoff(s: &str) -> Result<f64> {
    match s {
        "none" | "inf" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|_| {
            Error::InvalidParameter(format!("cutoff must be a number or `none`, got `{s}`"))
        }),
    }
}
