//! Organism identifications, backbone taxonomy lookup and synonym expansion.
//!
//! Every downstream search starts from a [`TaxonExpansion`]: the full set of
//! names under which an identified organism may have been published.

mod backbone;
mod identification;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

pub use backbone::{
    load_backbone, normalize_name, LoadReport, QuarantinedRow, TaxonId, TaxonRank, TaxonRecord,
    TaxonStatus, TaxonomyIndex, REQUIRED_COLUMNS,
};
pub use identification::{
    parse_identification, parse_identification_with, GenusAbbreviations, Identification,
    IdentificationRank,
};

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("identification is empty")]
    EmptyInput,
    #[error("cannot parse identification {0:?}")]
    UnparseableIdentification(String),
    #[error("abbreviated genus in {0:?} has no dictionary entry")]
    UnknownAbbreviation(String),
    #[error("backbone is missing required column {0:?}")]
    MissingColumn(String),
    #[error("malformed backbone row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("accepted-name chain starting at {0} revisits a taxon")]
    CyclicTaxonomy(TaxonId),
    #[error("taxon {0} is not in the index")]
    UnknownTaxon(TaxonId),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why a name belongs to an expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NameProvenance {
    InputMatch,
    Synonym,
    GenusMember,
    GenusMemberSynonym,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpandedTaxon {
    pub record: TaxonRecord,
    pub provenance: NameProvenance,
}

/// Resolved name set for one matched taxon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaxonExpansion {
    pub input: Identification,
    pub matched: Vec<TaxonRecord>,
    /// Canonical name → provenance; one tag per name.
    pub names: BTreeMap<String, NameProvenance>,
    /// Every backbone record that contributed a name, in discovery order.
    pub members: Vec<ExpandedTaxon>,
    /// Set when a genus expansion was cut at the configured cap.
    pub truncated: bool,
}

impl TaxonExpansion {
    pub fn name_set(&self) -> HashSet<String> {
        self.names.keys().cloned().collect()
    }

    /// The accepted taxon the expansion is rooted at.
    pub fn root(&self) -> Option<&TaxonRecord> {
        self.members
            .iter()
            .find(|m| m.record.status == TaxonStatus::Accepted)
            .or_else(|| self.members.first())
            .map(|m| &m.record)
    }

    fn push(&mut self, record: &TaxonRecord, provenance: NameProvenance) {
        if self.members.iter().any(|m| m.record.taxon_id == record.taxon_id) {
            return;
        }
        self.names
            .entry(record.canonical_name.clone())
            .or_insert(provenance);
        self.members.push(ExpandedTaxon {
            record: record.clone(),
            provenance,
        });
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExpansionOptions {
    /// Maximum member species for a genus-level expansion; `None` is unlimited.
    pub genus_cap: Option<usize>,
}

/// Exact, case-insensitive canonical-name lookup at the identification's rank.
/// Matches come back ordered Accepted, Synonym, Doubtful.
pub fn resolve(ident: &Identification, index: &TaxonomyIndex) -> Vec<TaxonRecord> {
    let wanted = match ident.rank {
        IdentificationRank::SpeciesLevel => TaxonRank::Species,
        IdentificationRank::GenusUnspecified => TaxonRank::Genus,
    };
    let mut matches: Vec<TaxonRecord> = index
        .ids_by_name(&ident.canonical_name())
        .iter()
        .filter_map(|id| index.get(id))
        .filter(|r| r.rank == wanted)
        .cloned()
        .collect();
    matches.sort_by(|a, b| {
        a.status
            .cmp(&b.status)
            .then_with(|| a.taxon_id.cmp(&b.taxon_id))
    });
    matches
}

/// Follows `accepted_id` links until reaching a record that points at itself
/// or nowhere.
pub fn accepted_root<'a>(
    record: &'a TaxonRecord,
    index: &'a TaxonomyIndex,
) -> Result<&'a TaxonRecord, TaxonomyError> {
    let mut seen = HashSet::new();
    let mut current = record;
    loop {
        if !seen.insert(current.taxon_id.clone()) {
            return Err(TaxonomyError::CyclicTaxonomy(record.taxon_id.clone()));
        }
        match &current.accepted_id {
            Some(next) if next != &current.taxon_id => {
                current = index
                    .get(next)
                    .ok_or_else(|| TaxonomyError::UnknownTaxon(next.clone()))?;
            }
            _ => return Ok(current),
        }
    }
}

/// All synonyms hanging off `accepted`, including synonyms of synonyms.
fn synonym_closure<'a>(
    accepted: &TaxonRecord,
    index: &'a TaxonomyIndex,
) -> Result<Vec<&'a TaxonRecord>, TaxonomyError> {
    let mut out = Vec::new();
    let mut seen: HashSet<&TaxonId> = HashSet::new();
    let mut stack: Vec<&TaxonId> = index.synonyms_of(&accepted.taxon_id).iter().rev().collect();
    while let Some(id) = stack.pop() {
        if id == &accepted.taxon_id || !seen.insert(id) {
            continue;
        }
        let record = index
            .get(id)
            .ok_or_else(|| TaxonomyError::UnknownTaxon(id.clone()))?;
        out.push(record);
        stack.extend(index.synonyms_of(id).iter().rev());
    }
    Ok(out)
}

pub fn expand_synonyms(
    ident: &Identification,
    matched: &TaxonRecord,
    index: &TaxonomyIndex,
) -> Result<TaxonExpansion, TaxonomyError> {
    expand_synonyms_with(ident, matched, index, ExpansionOptions::default())
}

/// Expands one matched record into its searchable name set.
///
/// Species-level: the accepted taxon plus every synonym. Genus-level: the
/// genus itself, each member species and each species' synonyms.
pub fn expand_synonyms_with(
    ident: &Identification,
    matched: &TaxonRecord,
    index: &TaxonomyIndex,
    options: ExpansionOptions,
) -> Result<TaxonExpansion, TaxonomyError> {
    if index.get(&matched.taxon_id).is_none() {
        return Err(TaxonomyError::UnknownTaxon(matched.taxon_id.clone()));
    }
    let mut expansion = TaxonExpansion {
        input: ident.clone(),
        matched: vec![matched.clone()],
        names: BTreeMap::new(),
        members: Vec::new(),
        truncated: false,
    };
    expansion.push(matched, NameProvenance::InputMatch);
    let root = accepted_root(matched, index)?;
    expansion.push(root, NameProvenance::Synonym);
    for syn in synonym_closure(root, index)? {
        expansion.push(syn, NameProvenance::Synonym);
    }

    if ident.rank == IdentificationRank::GenusUnspecified {
        let mut species: Vec<&TaxonRecord> = index
            .children_of(&root.taxon_id)
            .iter()
            .filter_map(|id| index.get(id))
            .filter(|r| r.rank == TaxonRank::Species && r.status != TaxonStatus::Synonym)
            .collect();
        species.sort_by(|a, b| a.canonical_name.cmp(&b.canonical_name));
        if let Some(cap) = options.genus_cap {
            if species.len() > cap {
                warn!(
                    genus = %root.canonical_name,
                    members = species.len(),
                    cap,
                    "genus expansion truncated"
                );
                species.truncate(cap);
                expansion.truncated = true;
            }
        }
        for member in species {
            expansion.push(member, NameProvenance::GenusMember);
            for syn in synonym_closure(member, index)? {
                expansion.push(syn, NameProvenance::GenusMemberSynonym);
            }
        }
    }
    Ok(expansion)
}

/// Resolves and expands an identification; one expansion per homonym match.
pub fn expand_identification(
    ident: &Identification,
    index: &TaxonomyIndex,
    options: ExpansionOptions,
) -> Result<Vec<TaxonExpansion>, TaxonomyError> {
    resolve(ident, index)
        .iter()
        .map(|m| expand_synonyms_with(ident, m, index, options))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const STRICTUM: &str = include_str!("../../fixtures/strictum/backbone.tsv");

    fn strictum() -> TaxonomyIndex {
        load_backbone(STRICTUM.as_bytes()).unwrap().0
    }

    fn header() -> String {
        REQUIRED_COLUMNS.join("\t")
    }

    #[test]
    fn four_row_fixture_loads() {
        let (index, report) = load_backbone(STRICTUM.as_bytes()).unwrap();
        assert_eq!(index.len(), 4);
        assert_eq!(index.synonym_link_count(), 3);
        assert!(report.quarantined.is_empty());
    }

    #[test]
    fn header_only_file_gives_empty_index() {
        let (index, report) = load_backbone(format!("{}\n", header()).as_bytes()).unwrap();
        assert!(index.is_empty());
        assert_eq!(report.loaded, 0);
    }

    #[test]
    fn synonym_without_accepted_id_is_quarantined() {
        let data = format!(
            "{}\n1\tFoo bar\tFoo bar L.\tspecies\tsynonym\t\t\n2\tFoo baz\tFoo baz\tspecies\taccepted\t\t\n",
            header()
        );
        let (index, report) = load_backbone(data.as_bytes()).unwrap();
        assert_eq!(index.len(), 1);
        assert_eq!(report.quarantined.len(), 1);
        assert_eq!(report.quarantined[0].line, 2);
        assert_eq!(report.quarantined[0].taxon_id, "1");
    }

    #[test]
    fn dangling_references_cascade_into_quarantine() {
        // 3 -> 2 -> 99 (missing): both 2 and 3 must go.
        let data = format!(
            "{}\n1\tFoo\tFoo\tgenus\taccepted\t\t\n2\tFoo bar\tFoo bar\tspecies\tsynonym\t99\t1\n3\tFoo qux\tFoo qux\tspecies\tsynonym\t2\t1\n",
            header()
        );
        let (index, report) = load_backbone(data.as_bytes()).unwrap();
        assert_eq!(index.len(), 1);
        let ids: Vec<_> = report.quarantined.iter().map(|q| q.taxon_id.as_str()).collect();
        assert_eq!(ids, ["2", "3"]);
    }

    #[test]
    fn unknown_status_is_quarantined_and_gbif_flavours_accepted() {
        let data = format!(
            "{}\n1\tFoo bar\tFoo bar\tspecies\tACCEPTED\t\t\n2\tFoo baz\tFoo baz\tspecies\tHETEROTYPIC_SYNONYM\t1\t\n3\tFoo qux\tFoo qux\tspecies\tmisapplied\t1\t\n",
            header()
        );
        let (index, report) = load_backbone(data.as_bytes()).unwrap();
        assert_eq!(index.len(), 2);
        assert_eq!(report.quarantined.len(), 1);
        assert_eq!(index.get(&TaxonId("2".into())).unwrap().status, TaxonStatus::Synonym);
    }

    #[test]
    fn missing_column_and_malformed_row_are_errors() {
        let err = load_backbone("taxonID\tcanonicalName\n".as_bytes()).unwrap_err();
        assert!(matches!(err, TaxonomyError::MissingColumn(c) if c == "scientificName"));

        let data = format!("{}\n1\tFoo\n", header());
        let err = load_backbone(data.as_bytes()).unwrap_err();
        assert!(matches!(err, TaxonomyError::MalformedRow { line: 2, .. }));
    }

    #[test]
    fn resolve_accepted_and_synonym() {
        let index = strictum();
        let hits = resolve(&parse_identification("Sarocladium strictum").unwrap(), &index);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].status, TaxonStatus::Accepted);

        let hits = resolve(&parse_identification("cephalosporium  acremonium").unwrap(), &index);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].status, TaxonStatus::Synonym);
        assert_eq!(hits[0].accepted_id.as_ref(), Some(&resolve(
            &parse_identification("Sarocladium strictum").unwrap(),
            &index
        )[0].taxon_id));

        assert!(resolve(&parse_identification("Nonexistent thing").unwrap(), &index).is_empty());
    }

    #[test]
    fn resolve_orders_homonyms_by_status() {
        let data = format!(
            "{}\n1\tFoo bar\tFoo bar A\tspecies\tdoubtful\t\t\n2\tFoo bar\tFoo bar B\tspecies\tsynonym\t3\t\n3\tFoo qux\tFoo qux\tspecies\taccepted\t\t\n4\tFoo bar\tFoo bar C\tspecies\taccepted\t\t\n",
            header()
        );
        let index = load_backbone(data.as_bytes()).unwrap().0;
        let statuses: Vec<_> = resolve(&parse_identification("Foo bar").unwrap(), &index)
            .into_iter()
            .map(|r| r.status)
            .collect();
        assert_eq!(
            statuses,
            [TaxonStatus::Accepted, TaxonStatus::Synonym, TaxonStatus::Doubtful]
        );
    }

    #[test]
    fn strictum_expands_to_four_names() {
        let index = strictum();
        for name in [
            "Sarocladium strictum",
            "Cephalosporium acremonium",
            "Hyalopus acremonium",
            "Acremonium strictum",
        ] {
            let ident = parse_identification(name).unwrap();
            let expansions = expand_identification(&ident, &index, Default::default()).unwrap();
            assert_eq!(expansions.len(), 1);
            let names: Vec<_> = expansions[0].names.keys().cloned().collect();
            assert_eq!(
                names,
                [
                    "Acremonium strictum",
                    "Cephalosporium acremonium",
                    "Hyalopus acremonium",
                    "Sarocladium strictum"
                ]
            );
            assert_eq!(expansions[0].names[name], NameProvenance::InputMatch);
            assert_eq!(expansions[0].root().unwrap().canonical_name, "Sarocladium strictum");
        }
    }

    #[test]
    fn accepted_species_without_synonyms_is_singleton() {
        let data = format!("{}\n1\tFoo bar\tFoo bar\tspecies\taccepted\t\t\n", header());
        let index = load_backbone(data.as_bytes()).unwrap().0;
        let ident = parse_identification("Foo bar").unwrap();
        let exp = &expand_identification(&ident, &index, Default::default()).unwrap()[0];
        assert_eq!(exp.names.len(), 1);
    }

    fn genus_fixture() -> TaxonomyIndex {
        let data = format!(
            "{}\n\
             10\tAspergillus\tAspergillus P.Micheli\tgenus\taccepted\t\t\n\
             11\tAspergillus calidoustus\tAspergillus calidoustus Varga et al.\tspecies\taccepted\t\t10\n\
             12\tAspergillus ustus\tAspergillus ustus (Bainier) Thom & Church\tspecies\taccepted\t\t10\n\
             13\tSterigmatocystis calidoustus\tSterigmatocystis calidoustus\tspecies\tsynonym\t11\t10\n\
             14\tSterigmatocystis usta\tSterigmatocystis usta Bainier\tspecies\tsynonym\t12\t\n",
            header()
        );
        load_backbone(data.as_bytes()).unwrap().0
    }

    #[test]
    fn genus_expansion_enumerates_members_and_their_synonyms() {
        let index = genus_fixture();
        let ident = parse_identification("Aspergillus sp.").unwrap();
        let exp = &expand_identification(&ident, &index, Default::default()).unwrap()[0];
        assert_eq!(exp.names.len(), 5);
        assert_eq!(exp.names["Aspergillus"], NameProvenance::InputMatch);
        assert_eq!(exp.names["Aspergillus ustus"], NameProvenance::GenusMember);
        assert_eq!(
            exp.names["Sterigmatocystis usta"],
            NameProvenance::GenusMemberSynonym
        );
        assert!(!exp.truncated);
    }

    #[test]
    fn genus_cap_truncates_with_flag() {
        let index = genus_fixture();
        let ident = parse_identification("Aspergillus sp.").unwrap();
        let exp = &expand_identification(&ident, &index, ExpansionOptions { genus_cap: Some(1) })
            .unwrap()[0];
        assert!(exp.truncated);
        assert_eq!(exp.names.len(), 3);
        assert!(exp.names.contains_key("Aspergillus calidoustus"));
    }

    #[test]
    fn cyclic_accepted_chain_is_detected() {
        let data = format!(
            "{}\n1\tFoo bar\tFoo bar\tspecies\tsynonym\t2\t\n2\tFoo baz\tFoo baz\tspecies\tsynonym\t1\t\n",
            header()
        );
        let index = load_backbone(data.as_bytes()).unwrap().0;
        let ident = parse_identification("Foo bar").unwrap();
        assert!(matches!(
            expand_identification(&ident, &index, Default::default()),
            Err(TaxonomyError::CyclicTaxonomy(_))
        ));
    }
}
