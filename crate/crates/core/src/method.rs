//! Method identifiers used on the command line and in exported results.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::hybrid::HybridKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MethodId {
    #[serde(rename = "bpso")]
    Bpso,
    #[serde(rename = "bpso-chi")]
    BpsoChi,
    #[serde(rename = "spsa-pso-1")]
    SpsaPso1,
    #[serde(rename = "spsa-pso-1-chi")]
    SpsaPso1Chi,
    #[serde(rename = "spsa-pso-2")]
    SpsaPso2,
    #[serde(rename = "spsa-pso-2-chi")]
    SpsaPso2Chi,
    #[serde(rename = "spsa-pso-3")]
    SpsaPso3,
    #[serde(rename = "spsa-pso-3-chi")]
    SpsaPso3Chi,
    #[serde(rename = "spsa")]
    Spsa,
}

impl MethodId {
    /// The eight swarm-based methods, in benchmark-table column order.
    pub const SWARM: [MethodId; 8] = [
        MethodId::Bpso,
        MethodId::BpsoChi,
        MethodId::SpsaPso1,
        MethodId::SpsaPso1Chi,
        MethodId::SpsaPso2,
        MethodId::SpsaPso2Chi,
        MethodId::SpsaPso3,
        MethodId::SpsaPso3Chi,
    ];

    pub const ALL: [MethodId; 9] = [
        MethodId::Bpso,
        MethodId::BpsoChi,
        MethodId::SpsaPso1,
        MethodId::SpsaPso1Chi,
        MethodId::SpsaPso2,
        MethodId::SpsaPso2Chi,
        MethodId::SpsaPso3,
        MethodId::SpsaPso3Chi,
        MethodId::Spsa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Bpso => "bpso",
            MethodId::BpsoChi => "bpso-chi",
            MethodId::SpsaPso1 => "spsa-pso-1",
            MethodId::SpsaPso1Chi => "spsa-pso-1-chi",
            MethodId::SpsaPso2 => "spsa-pso-2",
            MethodId::SpsaPso2Chi => "spsa-pso-2-chi",
            MethodId::SpsaPso3 => "spsa-pso-3",
            MethodId::SpsaPso3Chi => "spsa-pso-3-chi",
            MethodId::Spsa => "spsa",
        }
    }

    /// Whether the swarm uses the constriction update.
    pub fn constricted(self) -> bool {
        matches!(
            self,
            MethodId::BpsoChi
                | MethodId::SpsaPso1Chi
                | MethodId::SpsaPso2Chi
                | MethodId::SpsaPso3Chi
        )
    }

    pub fn hybrid_kind(self) -> Option<HybridKind> {
        match self {
            MethodId::SpsaPso1 | MethodId::SpsaPso1Chi => Some(HybridKind::GbestRefine),
            MethodId::SpsaPso2 | MethodId::SpsaPso2Chi => Some(HybridKind::AgbFgbf),
            MethodId::SpsaPso3 | MethodId::SpsaPso3Chi => Some(HybridKind::SwarmRefine),
            MethodId::Bpso | MethodId::BpsoChi | MethodId::Spsa => None,
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for m in MethodId::ALL {
            assert_eq!(m.as_str().parse::<MethodId>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
        assert!(matches!(
            "nope".parse::<MethodId>(),
            Err(Error::UnknownMethod(_))
        ));
    }

    #[test]
    fn chi_suffix_means_constriction() {
        for m in MethodId::ALL {
            assert_eq!(m.constricted(), m.as_str().ends_with("-chi"));
        }
    }
}
