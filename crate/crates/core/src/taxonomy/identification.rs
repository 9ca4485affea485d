use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::TaxonomyError;

/// How precisely a user identification pins down an organism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdentificationRank {
    SpeciesLevel,
    /// "Genus sp.": an undetermined species within the genus.
    GenusUnspecified,
}

/// A parsed organism identification as typed by a user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identification {
    pub raw: String,
    pub genus: String,
    pub species: Option<String>,
    pub rank: IdentificationRank,
}

impl Identification {
    /// Canonical binomial (or uninomial) this identification refers to.
    pub fn canonical_name(&self) -> String {
        match &self.species {
            Some(epithet) => format!("{} {}", self.genus, epithet),
            None => self.genus.clone(),
        }
    }
}

impl fmt::Display for Identification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rank {
            IdentificationRank::SpeciesLevel => write!(f, "{}", self.canonical_name()),
            IdentificationRank::GenusUnspecified => write!(f, "{} sp.", self.genus),
        }
    }
}

/// Abbreviated genus forms ("S.") mapped to their full genus name.
#[derive(Debug, Clone, Default)]
pub struct GenusAbbreviations {
    entries: HashMap<String, String>,
}

impl GenusAbbreviations {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, abbreviation: &str, genus: &str) {
        self.entries
            .insert(abbreviation_key(abbreviation), genus.to_string());
    }

    pub fn get(&self, abbreviation: &str) -> Option<&str> {
        self.entries
            .get(&abbreviation_key(abbreviation))
            .map(String::as_str)
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for GenusAbbreviations {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut abbreviations = Self::new();
        for (abbr, genus) in iter {
            abbreviations.insert(abbr, genus);
        }
        abbreviations
    }
}

fn abbreviation_key(abbreviation: &str) -> String {
    abbreviation.trim().trim_end_matches('.').to_lowercase()
}

const INFRASPECIFIC_MARKERS: &[&str] = &[
    "subsp.", "subsp", "ssp.", "ssp", "var.", "var", "f.", "forma", "fo.", "cv.", "morph",
];

fn is_unspecified_marker(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower == "sp" || lower == "sp."
}

/// Authorship tokens start with an uppercase letter or a parenthesis, or are
/// bare years ("Summerb.", "(W. Gams)", "1882").
fn looks_like_authorship(token: &str) -> bool {
    let first = match token.chars().next() {
        Some(c) => c,
        None => return false,
    };
    first.is_uppercase()
        || first == '('
        || first == '&'
        || token.chars().all(|c| c.is_ascii_digit() || c == ',')
}

fn is_abbreviated_genus(token: &str) -> bool {
    token.ends_with('.') && token.trim_end_matches('.').chars().count() <= 3
}

/// Parses an identification without any abbreviation dictionary.
pub fn parse_identification(raw: &str) -> Result<Identification, TaxonomyError> {
    parse_identification_with(raw, &GenusAbbreviations::default())
}

/// Parses "Genus species", "Genus sp." or an abbreviated "G. species" form.
///
/// Authorship after the epithet and infraspecific tails ("var. x") are dropped.
pub fn parse_identification_with(
    raw: &str,
    abbreviations: &GenusAbbreviations,
) -> Result<Identification, TaxonomyError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(TaxonomyError::EmptyInput);
    }
    let tokens: Vec<&str> = trimmed.split_whitespace().collect();

    let genus = if is_abbreviated_genus(tokens[0]) {
        abbreviations
            .get(tokens[0])
            .map(str::to_string)
            .ok_or_else(|| TaxonomyError::UnknownAbbreviation(trimmed.to_string()))?
    } else {
        tokens[0].to_string()
    };

    if tokens.len() == 1 {
        return Ok(Identification {
            raw: raw.to_string(),
            genus,
            species: None,
            rank: IdentificationRank::GenusUnspecified,
        });
    }

    if is_unspecified_marker(tokens[1]) {
        if tokens.len() > 2 && !tokens[2..].iter().all(|t| looks_like_authorship(t)) {
            return Err(TaxonomyError::UnparseableIdentification(
                trimmed.to_string(),
            ));
        }
        return Ok(Identification {
            raw: raw.to_string(),
            genus,
            species: None,
            rank: IdentificationRank::GenusUnspecified,
        });
    }

    let epithet = tokens[1];
    if looks_like_authorship(epithet) {
        return Err(TaxonomyError::UnparseableIdentification(
            trimmed.to_string(),
        ));
    }

    let rest = &tokens[2..];
    let tail_ok = match rest.first() {
        None => true,
        Some(t) if INFRASPECIFIC_MARKERS.contains(&t.to_lowercase().as_str()) => true,
        Some(_) => rest.iter().all(|t| looks_like_authorship(t)),
    };
    if !tail_ok {
        return Err(TaxonomyError::UnparseableIdentification(
            trimmed.to_string(),
        ));
    }

    Ok(Identification {
        raw: raw.to_string(),
        genus,
        species: Some(epithet.to_string()),
        rank: IdentificationRank::SpeciesLevel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genus_level_identification() {
        let id = parse_identification("Aspergillus sp.").unwrap();
        assert_eq!(id.genus, "Aspergillus");
        assert_eq!(id.species, None);
        assert_eq!(id.rank, IdentificationRank::GenusUnspecified);

        let id = parse_identification("Aspergillus SP").unwrap();
        assert_eq!(id.rank, IdentificationRank::GenusUnspecified);
    }

    #[test]
    fn species_level_identification() {
        let id = parse_identification("Aspergillus calidoustus").unwrap();
        assert_eq!(id.genus, "Aspergillus");
        assert_eq!(id.species.as_deref(), Some("calidoustus"));
        assert_eq!(id.rank, IdentificationRank::SpeciesLevel);
        assert_eq!(id.to_string(), "Aspergillus calidoustus");
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            parse_identification(""),
            Err(TaxonomyError::EmptyInput)
        ));
        assert!(matches!(
            parse_identification("   "),
            Err(TaxonomyError::EmptyInput)
        ));
    }

    #[test]
    fn authorship_and_infraspecific_tails_are_dropped() {
        let id = parse_identification("Sarocladium strictum (W. Gams) Summerb.").unwrap();
        assert_eq!(id.canonical_name(), "Sarocladium strictum");

        let id = parse_identification("Aspergillus niger var. awamori").unwrap();
        assert_eq!(id.canonical_name(), "Aspergillus niger");
    }

    #[test]
    fn three_plain_tokens_are_unparseable() {
        assert!(matches!(
            parse_identification("Aspergillus niger awamori"),
            Err(TaxonomyError::UnparseableIdentification(_))
        ));
    }

    #[test]
    fn abbreviated_genus_needs_dictionary_entry() {
        assert!(matches!(
            parse_identification("S. strictum"),
            Err(TaxonomyError::UnknownAbbreviation(_))
        ));
        let dict: GenusAbbreviations = [("S.", "Sarocladium")].into_iter().collect();
        let id = parse_identification_with("S. strictum", &dict).unwrap();
        assert_eq!(id.canonical_name(), "Sarocladium strictum");
    }
}
