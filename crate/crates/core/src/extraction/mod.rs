//! LLM-backed relation extraction and two-stage activity evidence grading.

mod backend;
mod chemical;
mod evidence;
mod prompts;
mod relations;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    BackendConfig, BackendError, BackendIdentity, CallLog, CallRecord, HttpBackend, LlmBackend,
    StubBackend, StubRule, StubScript,
};
pub use chemical::{normalize_chemical_name, query_variants, ChemicalName, ChemicalStopList};
pub use evidence::{parse_evidence_output, parse_level_output, ActivityEvidence, EvidenceSubject};
pub use prompts::{prompt_digest, PromptTemplate};
pub use relations::{match_organism, parse_relation_output, NPRelationCandidate, RelationLines};

use crate::literature::DocumentRef;
use crate::model::{AlertLevel, RelationSource};

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error(transparent)]
    BackendUnavailable(#[from] BackendError),
    #[error("unparseable backend output ({reason})")]
    OutputUnparseable { reason: String, output: String },
    #[error("empty input text")]
    EmptyInput,
    #[error("name is empty after normalization: {0:?}")]
    EmptyAfterNormalization(String),
}

/// Which template produced a prompt and the digest of the rendered prompt.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PromptRef {
    pub template: String,
    pub template_digest: String,
    pub prompt_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub backend: BackendIdentity,
    pub prompts: Vec<PromptRef>,
}

/// The four templates the extractor renders.
#[derive(Debug, Clone)]
pub struct PromptSuite {
    pub relation: PromptTemplate,
    pub evidence: PromptTemplate,
    pub level: PromptTemplate,
    pub pseudo_label: PromptTemplate,
}

impl Default for PromptSuite {
    fn default() -> Self {
        Self {
            relation: PromptTemplate::relation_extraction(),
            evidence: PromptTemplate::activity_evidence(),
            level: PromptTemplate::alert_level(),
            pseudo_label: PromptTemplate::npr_pseudo_label(),
        }
    }
}

/// A passage handed to relation extraction.
#[derive(Debug, Clone, Copy)]
pub struct Passage<'a> {
    pub text: &'a str,
    pub doc: &'a DocumentRef,
    pub passage_id: &'a str,
    pub source: RelationSource,
}

/// Result of stage one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceAnswer {
    pub rationale: Option<String>,
    pub response: String,
    pub prompt: PromptRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationOutput {
    pub candidates: Vec<NPRelationCandidate>,
    pub warnings: Vec<String>,
}

/// Backend plus prompt suite, with every call logged.
#[derive(Clone)]
pub struct Extractor {
    backend: Arc<dyn LlmBackend>,
    prompts: PromptSuite,
    log: Option<Arc<CallLog>>,
    max_output: usize,
}

impl Extractor {
    pub fn new(backend: Arc<dyn LlmBackend>) -> Self {
        Self {
            backend,
            prompts: PromptSuite::default(),
            log: None,
            max_output: 512,
        }
    }

    pub fn with_log(mut self, log: Arc<CallLog>) -> Self {
        self.log = Some(log);
        self
    }

    pub fn with_prompts(mut self, prompts: PromptSuite) -> Self {
        self.prompts = prompts;
        self
    }

    pub fn with_max_output(mut self, tokens: usize) -> Self {
        self.max_output = tokens;
        self
    }

    pub fn identity(&self) -> BackendIdentity {
        self.backend.identity()
    }

    pub fn prompts(&self) -> &PromptSuite {
        &self.prompts
    }

    fn call<T>(
        &self,
        template: &PromptTemplate,
        prompt: &str,
        parse: impl FnOnce(&str) -> Result<T, ExtractionError>,
    ) -> Result<(T, PromptRef), ExtractionError> {
        let prompt_ref = PromptRef {
            template: template.tag(),
            template_digest: template.digest(),
            prompt_digest: prompt_digest(prompt),
        };
        let started = Instant::now();
        let response = self.backend.complete(prompt, self.max_output);
        let parsed = match response {
            Ok(text) => parse(&text),
            Err(e) => Err(ExtractionError::from(e)),
        };
        if let Some(log) = &self.log {
            let status = match &parsed {
                Ok(_) => "ok",
                Err(ExtractionError::BackendUnavailable(_)) => "unavailable",
                Err(_) => "unparseable",
            };
            log.append(&CallRecord {
                prompt_digest: prompt_ref.prompt_digest.clone(),
                template: prompt_ref.template.clone(),
                backend: self.backend.identity(),
                duration_ms: started.elapsed().as_millis() as u64,
                status: status.to_string(),
            });
        }
        parsed.map(|v| (v, prompt_ref))
    }

    /// Asks for isolation pairs in `passage`. Mentions outside
    /// `organism_names` are kept and flagged off-target.
    pub fn extract_relations(
        &self,
        passage: Passage<'_>,
        organism_names: &BTreeSet<String>,
    ) -> Result<RelationOutput, ExtractionError> {
        if passage.text.trim().is_empty() {
            return Err(ExtractionError::EmptyInput);
        }
        let organisms = organism_names.iter().cloned().collect::<Vec<_>>().join("; ");
        let prompt = self
            .prompts
            .relation
            .render_pairs(&[("organisms", &organisms), ("text", passage.text)]);
        let (lines, prompt_ref) = self.call(&self.prompts.relation, &prompt, parse_relation_output)?;
        let provenance = Provenance {
            backend: self.identity(),
            prompts: vec![prompt_ref],
        };
        let (candidates, mut warnings) = relations::candidates_from_pairs(
            &lines.pairs,
            organism_names,
            passage.doc,
            passage.passage_id,
            passage.source,
            &provenance,
        );
        warnings.extend(
            lines
                .rejected
                .iter()
                .map(|l| format!("unreadable relation line {l:?}")),
        );
        Ok(RelationOutput {
            candidates,
            warnings,
        })
    }

    /// Stage one: is there evidence of antibiotic activity of `subject`?
    pub fn extract_activity_evidence(
        &self,
        text: &str,
        subject: &str,
    ) -> Result<EvidenceAnswer, ExtractionError> {
        if text.trim().is_empty() {
            return Err(ExtractionError::EmptyInput);
        }
        let prompt = self
            .prompts
            .evidence
            .render_pairs(&[("subject", subject), ("text", text)]);
        let mut response = String::new();
        let (rationale, prompt_ref) = self.call(&self.prompts.evidence, &prompt, |out| {
            response = out.to_string();
            parse_evidence_output(out)
        })?;
        Ok(EvidenceAnswer {
            rationale,
            response: response.trim().to_string(),
            prompt: prompt_ref,
        })
    }

    /// Stage two: map a rationale to one level. Always yields a level unless
    /// the backend is unreachable.
    pub fn classify_alert_level(
        &self,
        rationale: &str,
    ) -> Result<(AlertLevel, Option<String>, PromptRef), ExtractionError> {
        let prompt = self
            .prompts
            .level
            .render_pairs(&[("rationale", rationale)]);
        let ((level, warning), prompt_ref) =
            self.call(&self.prompts.level, &prompt, |out| Ok(parse_level_output(out)))?;
        if let Some(w) = &warning {
            tracing::warn!(warning = %w, "alert level fallback");
        }
        Ok((level, warning, prompt_ref))
    }

    /// Both stages. A negative stage-one answer yields Weak evidence carrying
    /// the backend's answer as rationale.
    pub fn assess(
        &self,
        text: &str,
        subject: EvidenceSubject,
        doc: &DocumentRef,
    ) -> Result<ActivityEvidence, ExtractionError> {
        let answer = self.extract_activity_evidence(text, subject.name())?;
        let mut prompts = vec![answer.prompt];
        let mut warnings = Vec::new();
        let (level, rationale, found) = match answer.rationale {
            Some(rationale) => {
                let (level, warning, prompt_ref) = self.classify_alert_level(&rationale)?;
                prompts.push(prompt_ref);
                warnings.extend(warning);
                (level, rationale, true)
            }
            None => (AlertLevel::Weak, answer.response, false),
        };
        Ok(ActivityEvidence {
            subject,
            level,
            rationale,
            evidence_found: found,
            doc: doc.clone(),
            parse_warnings: warnings,
            provenance: Provenance {
                backend: self.identity(),
                prompts,
            },
        })
    }

    /// Yes/no pseudo-label for a title and abstract; `None` when the answer
    /// is neither.
    pub fn pseudo_label(
        &self,
        title: &str,
        abstract_text: &str,
    ) -> Result<Option<bool>, ExtractionError> {
        let prompt = self
            .prompts
            .pseudo_label
            .render_pairs(&[("title", title), ("abstract", abstract_text)]);
        let (answer, _) = self.call(&self.prompts.pseudo_label, &prompt, |out| {
            Ok(parse_yes_no(out))
        })?;
        Ok(answer)
    }
}

/// First word of the answer: yes or no, ignoring case and punctuation.
pub fn parse_yes_no(output: &str) -> Option<bool> {
    let word: String = output
        .trim_start()
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}
