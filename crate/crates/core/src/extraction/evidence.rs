use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{ExtractionError, Provenance};
use crate::literature::DocumentRef;
use crate::model::{AlertLevel, EvidenceKind, SubjectKind};

/// What an activity statement is about. The evidence kind follows from the
/// subject, so organism evidence is always OL and chemical evidence always CL.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EvidenceSubject {
    Organism { taxon_id: String, name: String },
    Chemical { key: String, display: String },
}

impl EvidenceSubject {
    pub fn evidence_kind(&self) -> EvidenceKind {
        match self {
            EvidenceSubject::Organism { .. } => EvidenceKind::OL,
            EvidenceSubject::Chemical { .. } => EvidenceKind::CL,
        }
    }

    pub fn subject_kind(&self) -> SubjectKind {
        match self {
            EvidenceSubject::Organism { .. } => SubjectKind::Organism,
            EvidenceSubject::Chemical { .. } => SubjectKind::Chemical,
        }
    }

    /// Taxon id or chemical key.
    pub fn id(&self) -> &str {
        match self {
            EvidenceSubject::Organism { taxon_id, .. } => taxon_id,
            EvidenceSubject::Chemical { key, .. } => key,
        }
    }

    /// Name used in prompts.
    pub fn name(&self) -> &str {
        match self {
            EvidenceSubject::Organism { name, .. } => name,
            EvidenceSubject::Chemical { display, .. } => display,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityEvidence {
    pub subject: EvidenceSubject,
    pub level: AlertLevel,
    /// Stage-one text. When no evidence was found this is the backend's
    /// negative answer and the level is Weak.
    pub rationale: String,
    pub evidence_found: bool,
    pub doc: DocumentRef,
    pub parse_warnings: Vec<String>,
    pub provenance: Provenance,
}

impl ActivityEvidence {
    pub fn kind(&self) -> EvidenceKind {
        self.subject.evidence_kind()
    }
}

const NO_EVIDENCE_MARKER: &str = "no evidence found";

/// Stage one: `None` when the backend reports no evidence, otherwise the
/// trimmed rationale.
pub fn parse_evidence_output(output: &str) -> Result<Option<String>, ExtractionError> {
    let text = output.trim();
    if text.is_empty() {
        return Err(ExtractionError::OutputUnparseable {
            reason: "empty response".into(),
            output: output.to_string(),
        });
    }
    if text.to_lowercase().contains(NO_EVIDENCE_MARKER) {
        return Ok(None);
    }
    Ok(Some(text.to_string()))
}

/// Stage two: the single level named on the first non-empty line. Anything
/// else falls back to Medium with a warning.
pub fn parse_level_output(output: &str) -> (AlertLevel, Option<String>) {
    let first = output
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or_default();
    let re = Regex::new(r"(?i)\b(strong|medium|weak)\b").expect("static regex");
    let mut found: Vec<AlertLevel> = re
        .find_iter(first)
        .filter_map(|m| m.as_str().parse().ok())
        .collect();
    found.sort();
    found.dedup();
    match found.as_slice() {
        [level] => (*level, None),
        [] => (
            AlertLevel::Medium,
            Some(format!("no alert level in {first:?}; defaulted to Medium")),
        ),
        _ => (
            AlertLevel::Medium,
            Some(format!("ambiguous alert level in {first:?}; defaulted to Medium")),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_one_parsing() {
        assert_eq!(
            parse_evidence_output("  It inhibits S. aureus.  ").unwrap().as_deref(),
            Some("It inhibits S. aureus.")
        );
        assert_eq!(
            parse_evidence_output("Therefore, there is No evidence found in this text.").unwrap(),
            None
        );
        assert!(parse_evidence_output(" \n").is_err());
    }

    #[test]
    fn stage_two_parsing_and_fallback() {
        assert_eq!(parse_level_output("Strong\nquantitative").0, AlertLevel::Strong);
        assert_eq!(parse_level_output("\nLevel: MEDIUM.").0, AlertLevel::Medium);
        assert_eq!(parse_level_output("weak").0, AlertLevel::Weak);
        let (level, warn) = parse_level_output("Strong or Weak");
        assert_eq!(level, AlertLevel::Medium);
        assert!(warn.is_some());
        let (level, warn) = parse_level_output("the evidence is strongly supported");
        assert_eq!(level, AlertLevel::Medium);
        assert!(warn.is_some());
        assert_eq!(parse_level_output("").0, AlertLevel::Medium);
    }

    #[test]
    fn kind_follows_subject() {
        let o = EvidenceSubject::Organism {
            taxon_id: "1".into(),
            name: "x".into(),
        };
        let c = EvidenceSubject::Chemical {
            key: "k".into(),
            display: "K".into(),
        };
        assert_eq!(o.evidence_kind(), EvidenceKind::OL);
        assert_eq!(c.evidence_kind(), EvidenceKind::CL);
    }
}
