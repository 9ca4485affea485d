//! Lexical Naive Bayes filters that gate documents into extraction.

mod corpus;
mod metrics;
mod naive_bayes;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{
    build_mesh_activity_corpus, build_pseudo_label_corpus, read_corpus, stratified_split,
    synthetic_separable_corpus, write_corpus, MeshTree, PseudoLabelOutcome, Resample,
    SyntheticCorpus, ANTIBACTERIAL_DESCRIPTOR,
};
pub use metrics::{evaluate, evaluate_predictions, f_beta, Confusion, EvalMetrics};
pub use naive_bayes::{train, Classification, LexicalModel, MODEL_FORMAT, MODEL_VERSION};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("corpus must contain both labels (positives {positives}, negatives {negatives})")]
    SingleClassCorpus { positives: usize, negatives: usize },
    #[error("smoothing alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("descriptor {0} is not in the MeSH tree")]
    DescriptorNotFound(String),
    #[error("requested {requested} {label} examples but only {available} are available")]
    InsufficientExamples {
        label: Label,
        requested: usize,
        available: usize,
    },
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("model file line {line}: {reason}")]
    MalformedModel { line: usize, reason: String },
    #[error("unsupported model version {0}")]
    UnsupportedModelVersion(String),
    #[error("MeSH tree line {line} is malformed")]
    MalformedMeshTree { line: usize },
    #[error("corpus line {line} is malformed")]
    MalformedCorpus { line: usize },
    #[error("example text is empty")]
    EmptyText,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "1" => Ok(Label::Positive),
            "negative" | "neg" | "0" => Ok(Label::Negative),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Origin {
    MeshDerived,
    PseudoLabel,
    Manual,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::MeshDerived => "mesh",
            Origin::PseudoLabel => "pseudo",
            Origin::Manual => "manual",
        }
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "mesh" => Ok(Origin::MeshDerived),
            "pseudo" => Ok(Origin::PseudoLabel),
            "manual" => Ok(Origin::Manual),
            other => Err(format!("unknown origin {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub text: String,
    pub label: Label,
    pub origin: Origin,
}

impl LabeledExample {
    pub fn new(text: impl Into<String>, label: Label, origin: Origin) -> Result<Self, FilterError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(FilterError::EmptyText);
        }
        Ok(Self {
            text,
            label,
            origin,
        })
    }
}

/// Lowercase, split on non-alphanumerics, drop tokens shorter than two chars.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

/// A document gate. Without a model every document passes.
#[derive(Debug, Clone)]
pub struct Gate {
    model: Option<Arc<LexicalModel>>,
    threshold: f64,
}

impl Gate {
    pub fn new(model: Option<Arc<LexicalModel>>, threshold: f64) -> Self {
        if model.is_none() {
            tracing::warn!("no filter model configured, all documents pass");
        }
        Self { model, threshold }
    }

    pub fn pass_all() -> Self {
        Self {
            model: None,
            threshold: 0.5,
        }
    }

    pub fn is_open(&self) -> bool {
        self.model.is_none()
    }

    pub fn admits(&self, text: &str) -> bool {
        match &self.model {
            Some(m) => m.classify_at(text, self.threshold).label == Label::Positive,
            None => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("Anti-Bacterial Agents"), vec!["anti", "bacterial", "agents"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("IC50 values"), vec!["ic50", "values"]);
        assert_eq!(tokenize("a b cd"), vec!["cd"]);
    }

    #[test]
    fn open_gate_admits_everything() {
        assert!(Gate::pass_all().admits(""));
        assert!(LabeledExample::new("  ", Label::Positive, Origin::Manual).is_err());
    }
}
