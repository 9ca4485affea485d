//! Vocabulary shared by extraction, the knowledge graph and reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Where an organism→chemical relation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationSource {
    LotusNPR,
    TiabNPR,
    ChunkNPR,
}

impl RelationSource {
    pub const ALL: [RelationSource; 3] = [Self::LotusNPR, Self::TiabNPR, Self::ChunkNPR];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LotusNPR => "LotusNPR",
            Self::TiabNPR => "TiabNPR",
            Self::ChunkNPR => "ChunkNPR",
        }
    }

    /// Relation extraction sources, as opposed to database annotations.
    pub fn is_extracted(self) -> bool {
        !matches!(self, Self::LotusNPR)
    }
}

/// Organism literature (OL) or chemical literature (CL).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EvidenceKind {
    OL,
    CL,
}

impl EvidenceKind {
    pub const ALL: [EvidenceKind; 2] = [Self::OL, Self::CL];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OL => "OL",
            Self::CL => "CL",
        }
    }
}

/// Ordered `Weak < Medium < Strong`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlertLevel {
    Weak,
    Medium,
    Strong,
}

impl AlertLevel {
    /// Strongest first.
    pub const ALL: [AlertLevel; 3] = [Self::Strong, Self::Medium, Self::Weak];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Strong => "Strong",
            Self::Medium => "Medium",
            Self::Weak => "Weak",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubjectKind {
    Organism,
    Chemical,
}

macro_rules! display_from_str {
    ($ty:ty, $label:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
                    .ok_or_else(|| format!("unknown {}: {s:?}", $label))
            }
        }
    };
}

display_from_str!(RelationSource, "relation source");
display_from_str!(EvidenceKind, "evidence kind");
display_from_str!(AlertLevel, "alert level");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_order_and_parse() {
        assert!(AlertLevel::Strong > AlertLevel::Medium);
        assert!(AlertLevel::Medium > AlertLevel::Weak);
        assert_eq!("strong".parse::<AlertLevel>().unwrap(), AlertLevel::Strong);
        assert_eq!("TiabNPR".parse::<RelationSource>().unwrap(), RelationSource::TiabNPR);
        assert!("maybe".parse::<AlertLevel>().is_err());
    }
}
