use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ops::KgOp;
use super::{AblationMode, PipelineError};
use crate::digest::short_digest;
use crate::kg::AlertSummary;
use crate::literature::atomic_write;
use crate::model::RelationSource;

pub const MANIFEST_FORMAT: &str = "np-alarm-manifest";
pub const CHECKPOINT_FORMAT: &str = "np-alarm-checkpoint";
pub const RUN_FORMAT_VERSION: u32 = 1;

/// The nine pipeline steps, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Step {
    ExpandTaxa,
    OrganismLiterature,
    OrganismActivityFilter,
    OrganismEvidence,
    NprFilter,
    RelationExtraction,
    ChemicalLiterature,
    ChemicalActivityFilter,
    ChemicalEvidence,
}

impl Step {
    pub const ALL: [Step; 9] = [
        Step::ExpandTaxa,
        Step::OrganismLiterature,
        Step::OrganismActivityFilter,
        Step::OrganismEvidence,
        Step::NprFilter,
        Step::RelationExtraction,
        Step::ChemicalLiterature,
        Step::ChemicalActivityFilter,
        Step::ChemicalEvidence,
    ];

    /// 1-based position.
    pub fn number(self) -> u8 {
        Self::ALL.iter().position(|s| *s == self).unwrap() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Step> {
        Self::ALL.get((n as usize).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Step::ExpandTaxa => "expand-taxa",
            Step::OrganismLiterature => "organism-literature",
            Step::OrganismActivityFilter => "organism-activity-filter",
            Step::OrganismEvidence => "organism-evidence",
            Step::NprFilter => "npr-filter",
            Step::RelationExtraction => "relation-extraction",
            Step::ChemicalLiterature => "chemical-literature",
            Step::ChemicalActivityFilter => "chemical-activity-filter",
            Step::ChemicalEvidence => "chemical-evidence",
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.number(), self.name())
    }
}

/// Flow counters. Deltas from each unit are summed into the manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub identifications: u64,
    pub no_taxon_match: u64,
    pub organisms: u64,
    pub expanded_names: u64,
    pub organism_documents: u64,
    pub organism_activity_in: u64,
    pub organism_activity_out: u64,
    pub npr_in: u64,
    pub npr_out: u64,
    pub passages: u64,
    pub off_target_mentions: u64,
    pub relations: BTreeMap<RelationSource, u64>,
    pub chemicals: u64,
    pub chemical_documents: u64,
    pub chemical_activity_in: u64,
    pub chemical_activity_out: u64,
    pub evidence: AlertSummary,
    pub failures: u64,
}

impl Counters {
    pub fn add(&mut self, d: &Counters) {
        self.identifications += d.identifications;
        self.no_taxon_match += d.no_taxon_match;
        self.organisms += d.organisms;
        self.expanded_names += d.expanded_names;
        self.organism_documents += d.organism_documents;
        self.organism_activity_in += d.organism_activity_in;
        self.organism_activity_out += d.organism_activity_out;
        self.npr_in += d.npr_in;
        self.npr_out += d.npr_out;
        self.passages += d.passages;
        self.off_target_mentions += d.off_target_mentions;
        for (k, v) in &d.relations {
            *self.relations.entry(*k).or_insert(0) += v;
        }
        self.chemicals += d.chemicals;
        self.chemical_documents += d.chemical_documents;
        self.chemical_activity_in += d.chemical_activity_in;
        self.chemical_activity_out += d.chemical_activity_out;
        self.evidence.merge(&d.evidence);
        self.failures += d.failures;
    }

    pub fn relations_total(&self) -> u64 {
        self.relations.values().sum()
    }

    /// Sum of every scalar counter; grows whenever work completes.
    pub fn progress(&self) -> u64 {
        self.identifications
            + self.organisms
            + self.organism_documents
            + self.organism_activity_in
            + self.npr_in
            + self.passages
            + self.relations_total()
            + self.chemicals
            + self.chemical_documents
            + self.chemical_activity_in
            + self.evidence.total() as u64
            + self.failures
    }
}

/// A per-unit problem that was recorded and skipped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Failure {
    pub step: Step,
    pub unit: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Halted,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub run_id: String,
    pub config_digest: String,
    pub mode: AblationMode,
    pub identifications: Vec<String>,
    pub status: RunStatus,
    pub started_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    /// Last step whose units all completed.
    pub completed_step: Option<Step>,
    pub counters: Counters,
    /// Completed units, as `step/unit` markers.
    pub checkpoints: BTreeSet<String>,
    pub failures: Vec<Failure>,
}

impl RunManifest {
    pub fn new(run_id: &str, config_digest: &str, mode: AblationMode, identifications: &[String]) -> Self {
        let now = Utc::now();
        Self {
            format: MANIFEST_FORMAT.into(),
            version: RUN_FORMAT_VERSION,
            run_id: run_id.into(),
            config_digest: config_digest.into(),
            mode,
            identifications: identifications.to_vec(),
            status: RunStatus::Running,
            started_at: now,
            updated_at: now,
            completed_step: None,
            counters: Counters::default(),
            checkpoints: BTreeSet::new(),
            failures: Vec::new(),
        }
    }

    pub fn marker(step: Step, unit: &str) -> String {
        format!("{}/{}", step.number(), unit)
    }

    pub fn has_checkpoint(&self, step: Step, unit: &str) -> bool {
        self.checkpoints.contains(&Self::marker(step, unit))
    }

    pub fn record(&mut self, checkpoint: &Checkpoint) {
        self.checkpoints
            .insert(Self::marker(checkpoint.step, &checkpoint.unit));
        self.counters.add(&checkpoint.counters);
        self.failures.extend(checkpoint.failures.iter().cloned());
        self.updated_at = Utc::now();
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let body = serde_json::to_vec_pretty(self)?;
        atomic_write(path, &body)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let body = std::fs::read(path)?;
        let m: RunManifest = serde_json::from_slice(&body)?;
        if m.format != MANIFEST_FORMAT || m.version != RUN_FORMAT_VERSION {
            return Err(PipelineError::Format(format!("{} v{}", m.format, m.version)));
        }
        Ok(m)
    }
}

/// Everything one (step, unit) produced: graph operations, counter deltas,
/// failures and the data handed to the next step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub step: Step,
    pub unit: String,
    pub ops: Vec<KgOp>,
    pub counters: Counters,
    pub failures: Vec<Failure>,
    pub payload: serde_json::Value,
}

impl Checkpoint {
    pub fn file_name(step: Step, unit: &str) -> String {
        format!("{:02}-{}.json", step.number(), short_digest(unit))
    }

    pub fn path(run_dir: &Path, step: Step, unit: &str) -> PathBuf {
        run_dir.join("checkpoints").join(Self::file_name(step, unit))
    }

    pub fn save(&self, run_dir: &Path) -> Result<(), PipelineError> {
        let body = serde_json::to_vec(self)?;
        atomic_write(&Self::path(run_dir, self.step, &self.unit), &body)?;
        Ok(())
    }

    pub fn load(run_dir: &Path, step: Step, unit: &str) -> Result<Self, PipelineError> {
        let path = Self::path(run_dir, step, unit);
        let body = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(PipelineError::MissingCheckpoint(RunManifest::marker(step, unit)))
            }
            Err(e) => return Err(e.into()),
        };
        let c: Checkpoint = serde_json::from_slice(&body)?;
        if c.format != CHECKPOINT_FORMAT || c.version != RUN_FORMAT_VERSION {
            return Err(PipelineError::Format(format!("{} v{}", c.format, c.version)));
        }
        if c.step != step || c.unit != unit {
            return Err(PipelineError::MissingCheckpoint(RunManifest::marker(step, unit)));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AlertLevel, EvidenceKind};

    #[test]
    fn step_numbering() {
        assert_eq!(Step::ExpandTaxa.number(), 1);
        assert_eq!(Step::ChemicalEvidence.number(), 9);
        for s in Step::ALL {
            assert_eq!(Step::from_number(s.number()), Some(s));
        }
        assert_eq!(Step::from_number(0), None);
        assert_eq!(Step::from_number(10), None);
    }

    #[test]
    fn counter_addition() {
        let mut a = Counters::default();
        let mut d = Counters {
            npr_in: 2,
            ..Default::default()
        };
        d.relations.insert(RelationSource::TiabNPR, 3);
        d.evidence.add(EvidenceKind::CL, AlertLevel::Strong);
        a.add(&d);
        a.add(&d);
        assert_eq!(a.npr_in, 4);
        assert_eq!(a.relations_total(), 6);
        assert_eq!(a.evidence.cl.strong, 2);
        assert!(a.progress() > d.progress());
    }
}
