use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::digest::{sha256_hex, short_digest};

/// A prompt template shipped with the crate, addressed by name and version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    pub version: u32,
    pub body: String,
}

impl PromptTemplate {
    pub fn new(name: &str, version: u32, body: &str) -> Self {
        Self {
            name: name.to_string(),
            version,
            body: body.to_string(),
        }
    }

    pub fn relation_extraction() -> Self {
        Self::new(
            "relation_extraction",
            1,
            include_str!("../../prompts/relation_extraction.v1.txt"),
        )
    }

    pub fn activity_evidence() -> Self {
        Self::new(
            "activity_evidence",
            1,
            include_str!("../../prompts/activity_evidence.v1.txt"),
        )
    }

    pub fn alert_level() -> Self {
        Self::new(
            "alert_level",
            1,
            include_str!("../../prompts/alert_level.v1.txt"),
        )
    }

    pub fn npr_pseudo_label() -> Self {
        Self::new(
            "npr_pseudo_label",
            1,
            include_str!("../../prompts/npr_pseudo_label.v1.txt"),
        )
    }

    /// `name.vN`
    pub fn tag(&self) -> String {
        format!("{}.v{}", self.name, self.version)
    }

    pub fn digest(&self) -> String {
        short_digest(&self.body)
    }

    /// Substitutes `{{key}}` placeholders. Unknown placeholders are left as is.
    pub fn render(&self, vars: &BTreeMap<&str, &str>) -> String {
        let mut out = self.body.clone();
        for (key, value) in vars {
            out = out.replace(&format!("{{{{{key}}}}}"), value);
        }
        out
    }

    pub fn render_pairs(&self, vars: &[(&str, &str)]) -> String {
        self.render(&vars.iter().copied().collect())
    }
}

/// Digest of a rendered prompt, as recorded in provenance and call logs.
pub fn prompt_digest(prompt: &str) -> String {
    sha256_hex(prompt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_templates_have_placeholders() {
        assert!(PromptTemplate::relation_extraction().body.contains("{{text}}"));
        assert!(PromptTemplate::activity_evidence().body.contains("{{subject}}"));
        assert!(PromptTemplate::alert_level().body.contains("{{rationale}}"));
        assert!(PromptTemplate::npr_pseudo_label().body.contains("{{abstract}}"));
    }

    #[test]
    fn render_substitutes_all_occurrences() {
        let t = PromptTemplate::new("t", 1, "{{a}} and {{a}} but {{b}}");
        assert_eq!(t.render_pairs(&[("a", "x")]), "x and x but {{b}}");
        assert_eq!(t.tag(), "t.v1");
        assert_eq!(t.digest().len(), 16);
    }
}
