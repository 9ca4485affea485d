use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ExtractionError;

/// A chemical name with its matching key and the form shown to reviewers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChemicalName {
    pub key: String,
    pub display: String,
}

const TRAILING: &[char] = &['.', ',', ';', ':', '!', '?'];
const QUOTES: &[char] = &['"', '\'', '`', '“', '”', '‘', '’'];

/// Trims, collapses whitespace and strips trailing punctuation and quotes
/// until nothing more comes off.
/// The key is the lowercased display form.
pub fn normalize_chemical_name(raw: &str) -> Result<ChemicalName, ExtractionError> {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut display = collapsed.as_str();
    loop {
        let next = display
            .trim_matches(QUOTES)
            .trim_end_matches(|c: char| TRAILING.contains(&c) || c.is_whitespace())
            .trim();
        if next == display {
            break;
        }
        display = next;
    }
    let display = display.to_string();
    if display.is_empty() {
        return Err(ExtractionError::EmptyAfterNormalization(raw.to_string()));
    }
    Ok(ChemicalName {
        key: display.to_lowercase(),
        display,
    })
}

/// Names to search the chemical literature with: the full surface form, plus
/// one variant per comma-separated member sharing the first member's stem
/// ("Altertoxin I, II, III" adds "Altertoxin I", "Altertoxin II", "Altertoxin III").
pub fn query_variants(name: &ChemicalName) -> Vec<String> {
    let mut out = vec![name.display.clone()];
    let parts: Vec<&str> = name
        .display
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() < 2 {
        return out;
    }
    let first = parts[0];
    let stem = match first.rsplit_once(' ') {
        Some((stem, _)) => stem,
        None => {
            out.extend(parts.iter().map(|p| p.to_string()));
            return dedup(out);
        }
    };
    out.push(first.to_string());
    for part in &parts[1..] {
        if part.contains(' ') {
            out.push(part.to_string());
        } else {
            out.push(format!("{stem} {part}"));
        }
    }
    dedup(out)
}

fn dedup(items: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    items
        .into_iter()
        .filter(|s| seen.insert(s.to_lowercase()))
        .collect()
}

/// Chemical keys never turned into Chemical nodes, such as compound families.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChemicalStopList {
    keys: BTreeSet<String>,
}

impl ChemicalStopList {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            keys: terms
                .into_iter()
                .filter_map(|t| normalize_chemical_name(t.as_ref()).ok())
                .map(|c| c.key)
                .collect(),
        }
    }

    pub fn contains(&self, name: &ChemicalName) -> bool {
        self.keys.contains(&name.key)
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_key_and_display() {
        let c = normalize_chemical_name("  Cephalosporin   C.").unwrap();
        assert_eq!(c.key, "cephalosporin c");
        assert_eq!(c.display, "Cephalosporin C");
        let c = normalize_chemical_name("Altertoxin I, II, III").unwrap();
        assert_eq!(c.display, "Altertoxin I, II, III");
        assert!(matches!(
            normalize_chemical_name(" . "),
            Err(ExtractionError::EmptyAfterNormalization(_))
        ));
        assert!(normalize_chemical_name("").is_err());
    }

    #[test]
    fn comma_lists_expand_with_shared_stem() {
        let c = normalize_chemical_name("Altertoxin I, II, III").unwrap();
        assert_eq!(
            query_variants(&c),
            vec![
                "Altertoxin I, II, III",
                "Altertoxin I",
                "Altertoxin II",
                "Altertoxin III"
            ]
        );
        let c = normalize_chemical_name("Zearalenone").unwrap();
        assert_eq!(query_variants(&c), vec!["Zearalenone"]);
    }

    #[test]
    fn stop_list_matches_by_key() {
        let stop = ChemicalStopList::new(["Isoprenoids"]);
        assert!(stop.contains(&normalize_chemical_name("isoprenoids.").unwrap()));
        assert!(!stop.contains(&normalize_chemical_name("Orbuticin").unwrap()));
        assert!(ChemicalStopList::default().is_empty());
    }
}
