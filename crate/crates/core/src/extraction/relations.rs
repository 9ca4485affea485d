use std::collections::BTreeSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::chemical::{normalize_chemical_name, ChemicalName};
use super::{ExtractionError, Provenance};
use crate::literature::DocumentRef;
use crate::model::RelationSource;
use crate::taxonomy::normalize_name;

/// An organism→chemical isolation pair read off one passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NPRelationCandidate {
    pub organism_mention: String,
    /// Name from the queried set the mention resolved to; `None` when off-target.
    pub matched_organism: Option<String>,
    pub chemical: ChemicalName,
    pub source: RelationSource,
    pub doc: DocumentRef,
    pub passage_id: String,
    pub off_target: bool,
    pub provenance: Provenance,
}

/// Parsed relation lines plus lines that could not be read.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationLines {
    pub pairs: Vec<(String, String)>,
    pub rejected: Vec<String>,
}

fn bullet_prefix() -> Regex {
    Regex::new(r"^\s*(?:[-*•+]+|\(?\d+[.)]|\[\d+\])\s*").expect("static regex")
}

/// Reads `organism | chemical` lines. Bullets, numbering and a header row are
/// tolerated; `NONE` or an empty output means no relations. Output with
/// content but no readable line is an error.
pub fn parse_relation_output(output: &str) -> Result<RelationLines, ExtractionError> {
    let bullets = bullet_prefix();
    let mut parsed = RelationLines::default();
    let mut seen = BTreeSet::new();
    for raw in output.lines() {
        let line = bullets.replace(raw, "");
        let line = line.trim().trim_matches('|').trim();
        if line.is_empty() || line.chars().all(|c| matches!(c, '-' | '|' | ' ' | ':')) {
            continue;
        }
        let bare = line.trim_end_matches('.').to_ascii_lowercase();
        if bare == "none" || bare == "no relations" {
            continue;
        }
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() < 2 || fields[0].is_empty() || fields[1].is_empty() {
            parsed.rejected.push(raw.to_string());
            continue;
        }
        if fields[0].eq_ignore_ascii_case("organism") && fields[1].eq_ignore_ascii_case("chemical")
        {
            continue;
        }
        let key = (normalize_name(fields[0]), fields[1].to_lowercase());
        if seen.insert(key) {
            parsed
                .pairs
                .push((fields[0].to_string(), fields[1].to_string()));
        }
    }
    if parsed.pairs.is_empty() && !parsed.rejected.is_empty() {
        return Err(ExtractionError::OutputUnparseable {
            reason: format!("{} line(s) without an 'organism | chemical' pair", parsed.rejected.len()),
            output: output.to_string(),
        });
    }
    Ok(parsed)
}

/// Resolves a text mention against the queried names. Besides exact
/// normalized matches, abbreviated genera ("C. acremonium") match a name with
/// the same initial and epithet.
pub fn match_organism(mention: &str, names: &BTreeSet<String>) -> Option<String> {
    let norm = normalize_name(mention);
    if let Some(hit) = names.iter().find(|n| normalize_name(n) == norm) {
        return Some(hit.clone());
    }
    let tokens: Vec<&str> = norm.split(' ').collect();
    if tokens.len() == 2 && tokens[0].ends_with('.') && tokens[0].len() == 2 {
        let initial = tokens[0].chars().next()?;
        return names
            .iter()
            .find(|n| {
                let nn = normalize_name(n);
                let mut parts = nn.split(' ');
                let genus = parts.next().unwrap_or_default();
                let epithet = parts.next();
                genus.starts_with(initial) && epithet == Some(tokens[1]) && parts.next().is_none()
            })
            .cloned();
    }
    None
}

/// Builds candidates from parsed pairs, collapsing pairs that normalize to
/// the same (organism, chemical key).
pub(crate) fn candidates_from_pairs(
    pairs: &[(String, String)],
    names: &BTreeSet<String>,
    doc: &DocumentRef,
    passage_id: &str,
    source: RelationSource,
    provenance: &Provenance,
) -> (Vec<NPRelationCandidate>, Vec<String>) {
    let mut out = Vec::new();
    let mut problems = Vec::new();
    let mut seen = BTreeSet::new();
    for (organism, chemical) in pairs {
        let chemical = match normalize_chemical_name(chemical) {
            Ok(c) => c,
            Err(e) => {
                problems.push(e.to_string());
                continue;
            }
        };
        let matched = match_organism(organism, names);
        let org_key = matched.clone().unwrap_or_else(|| normalize_name(organism));
        if !seen.insert((org_key, chemical.key.clone())) {
            continue;
        }
        out.push(NPRelationCandidate {
            organism_mention: organism.clone(),
            off_target: matched.is_none(),
            matched_organism: matched,
            chemical,
            source,
            doc: doc.clone(),
            passage_id: passage_id.to_string(),
            provenance: provenance.clone(),
        });
    }
    (out, problems)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> BTreeSet<String> {
        ["Sarocladium strictum", "Cephalosporium acremonium"]
            .into_iter()
            .map(String::from)
            .collect()
    }

    #[test]
    fn lenient_line_parsing() {
        let out = "Organism | Chemical\n1. Cephalosporium acremonium | Cephalosporin C\n- Sarocladium strictum | Isopenicillin N\n* C. acremonium | Cephalosporin C\n";
        let parsed = parse_relation_output(out).unwrap();
        assert_eq!(parsed.pairs.len(), 3);
        assert_eq!(parsed.pairs[0].1, "Cephalosporin C");
        assert!(parse_relation_output("NONE").unwrap().pairs.is_empty());
        assert!(parse_relation_output("").unwrap().pairs.is_empty());
        assert!(matches!(
            parse_relation_output("I cannot answer that."),
            Err(ExtractionError::OutputUnparseable { .. })
        ));
    }

    #[test]
    fn duplicate_pairs_collapse() {
        let out = "Cephalosporium acremonium | Cephalosporin C\nCephalosporium acremonium | Cephalosporin C";
        assert_eq!(parse_relation_output(out).unwrap().pairs.len(), 1);
    }

    #[test]
    fn organism_mentions_resolve_or_flag() {
        let n = names();
        assert_eq!(
            match_organism("cephalosporium  Acremonium", &n).as_deref(),
            Some("Cephalosporium acremonium")
        );
        assert_eq!(
            match_organism("C. acremonium", &n).as_deref(),
            Some("Cephalosporium acremonium")
        );
        assert_eq!(match_organism("Penicillium chrysogenum", &n), None);
    }
}
