use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::TaxonomyError;

/// Opaque backbone identifier (GBIF `taxonID`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaxonId(pub String);

impl std::fmt::Display for TaxonId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaxonRank {
    Genus,
    Species,
    Other(String),
}

impl TaxonRank {
    fn parse(raw: &str) -> Self {
        match raw.trim().to_lowercase().as_str() {
            "genus" => TaxonRank::Genus,
            "species" => TaxonRank::Species,
            other => TaxonRank::Other(other.to_string()),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            TaxonRank::Genus => "genus",
            TaxonRank::Species => "species",
            TaxonRank::Other(s) => s,
        }
    }
}

/// Ordering follows resolution preference: Accepted < Synonym < Doubtful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaxonStatus {
    Accepted,
    Synonym,
    Doubtful,
}

impl TaxonStatus {
    /// GBIF spells out synonym flavours (`HOMOTYPIC_SYNONYM`, "proparte synonym");
    /// all of them are synonyms for expansion purposes.
    fn parse(raw: &str) -> Option<Self> {
        let lower = raw.trim().to_lowercase().replace(['_', '-'], " ");
        match lower.as_str() {
            "accepted" => Some(TaxonStatus::Accepted),
            "doubtful" => Some(TaxonStatus::Doubtful),
            "synonym" | "homotypic synonym" | "heterotypic synonym" | "proparte synonym" => {
                Some(TaxonStatus::Synonym)
            }
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TaxonStatus::Accepted => "accepted",
            TaxonStatus::Synonym => "synonym",
            TaxonStatus::Doubtful => "doubtful",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonRecord {
    pub taxon_id: TaxonId,
    pub scientific_name: String,
    pub canonical_name: String,
    pub rank: TaxonRank,
    pub status: TaxonStatus,
    pub accepted_id: Option<TaxonId>,
    pub parent_id: Option<TaxonId>,
}

/// A backbone row that was set aside instead of failing the load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarantinedRow {
    pub line: usize,
    pub taxon_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub loaded: usize,
    pub quarantined: Vec<QuarantinedRow>,
}

pub const REQUIRED_COLUMNS: [&str; 7] = [
    "taxonID",
    "canonicalName",
    "scientificName",
    "taxonRank",
    "taxonomicStatus",
    "acceptedNameUsageID",
    "parentNameUsageID",
];

/// Lowercase and collapse whitespace; the matching key for canonical names.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Immutable, read-only view over a loaded backbone.
#[derive(Debug, Clone, Default)]
pub struct TaxonomyIndex {
    records: BTreeMap<TaxonId, TaxonRecord>,
    by_name: HashMap<String, Vec<TaxonId>>,
    synonyms_of: HashMap<TaxonId, Vec<TaxonId>>,
    children_of: HashMap<TaxonId, Vec<TaxonId>>,
}

impl TaxonomyIndex {
    /// Builds an index from records that are already known to be consistent.
    /// Dangling references are quarantined the same way as in [`load_backbone`].
    pub fn from_records(records: Vec<TaxonRecord>) -> (Self, Vec<QuarantinedRow>) {
        let rows = records
            .into_iter()
            .enumerate()
            .map(|(i, r)| (i + 1, r))
            .collect();
        Self::build(rows)
    }

    fn build(rows: Vec<(usize, TaxonRecord)>) -> (Self, Vec<QuarantinedRow>) {
        let mut quarantined = Vec::new();
        let mut records: BTreeMap<TaxonId, (usize, TaxonRecord)> = BTreeMap::new();
        for (line, record) in rows {
            if records.contains_key(&record.taxon_id) {
                quarantined.push(QuarantinedRow {
                    line,
                    taxon_id: record.taxon_id.0.clone(),
                    reason: "duplicate taxonID".into(),
                });
                continue;
            }
            records.insert(record.taxon_id.clone(), (line, record));
        }

        // Removing a row can orphan rows that point at it, so iterate to a fixpoint.
        loop {
            let dangling: Vec<(TaxonId, String)> = records
                .values()
                .filter_map(|(_, r)| {
                    if let Some(acc) = &r.accepted_id {
                        if acc != &r.taxon_id && !records.contains_key(acc) {
                            return Some((
                                r.taxon_id.clone(),
                                format!("dangling acceptedNameUsageID {acc}"),
                            ));
                        }
                    }
                    if let Some(parent) = &r.parent_id {
                        if !records.contains_key(parent) {
                            return Some((
                                r.taxon_id.clone(),
                                format!("dangling parentNameUsageID {parent}"),
                            ));
                        }
                    }
                    None
                })
                .collect();
            if dangling.is_empty() {
                break;
            }
            for (id, reason) in dangling {
                if let Some((line, _)) = records.remove(&id) {
                    quarantined.push(QuarantinedRow {
                        line,
                        taxon_id: id.0,
                        reason,
                    });
                }
            }
        }

        let mut index = TaxonomyIndex::default();
        for (_, record) in records.into_values() {
            index
                .by_name
                .entry(normalize_name(&record.canonical_name))
                .or_default()
                .push(record.taxon_id.clone());
            if let Some(acc) = &record.accepted_id {
                if acc != &record.taxon_id {
                    index
                        .synonyms_of
                        .entry(acc.clone())
                        .or_default()
                        .push(record.taxon_id.clone());
                }
            }
            if let Some(parent) = &record.parent_id {
                index
                    .children_of
                    .entry(parent.clone())
                    .or_default()
                    .push(record.taxon_id.clone());
            }
            index.records.insert(record.taxon_id.clone(), record);
        }
        for ids in index
            .synonyms_of
            .values_mut()
            .chain(index.children_of.values_mut())
        {
            ids.sort();
        }
        quarantined.sort_by_key(|q| q.line);
        (index, quarantined)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &TaxonId) -> Option<&TaxonRecord> {
        self.records.get(id)
    }

    pub fn records(&self) -> impl Iterator<Item = &TaxonRecord> {
        self.records.values()
    }

    pub fn ids_by_name(&self, name: &str) -> &[TaxonId] {
        self.by_name
            .get(&normalize_name(name))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn synonyms_of(&self, accepted: &TaxonId) -> &[TaxonId] {
        self.synonyms_of
            .get(accepted)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn children_of(&self, parent: &TaxonId) -> &[TaxonId] {
        self.children_of
            .get(parent)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Number of accepted→synonym links held by the index.
    pub fn synonym_link_count(&self) -> usize {
        self.synonyms_of.values().map(Vec::len).sum()
    }

    /// Writes the index back out in the backbone column layout.
    pub fn write_backbone<W: Write>(&self, writer: W) -> Result<(), TaxonomyError> {
        let mut out = csv::WriterBuilder::new()
            .delimiter(b'\t')
            .quote_style(csv::QuoteStyle::Never)
            .from_writer(writer);
        out.write_record(REQUIRED_COLUMNS)?;
        for r in self.records.values() {
            out.write_record([
                r.taxon_id.0.as_str(),
                r.canonical_name.as_str(),
                r.scientific_name.as_str(),
                r.rank.label(),
                r.status.label(),
                r.accepted_id.as_ref().map(|a| a.0.as_str()).unwrap_or(""),
                r.parent_id.as_ref().map(|p| p.0.as_str()).unwrap_or(""),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn optional_id(raw: &str) -> Option<TaxonId> {
    let raw = raw.trim();
    (!raw.is_empty()).then(|| TaxonId(raw.to_string()))
}

/// Loads a tab-separated Darwin-Core style backbone dump.
///
/// Rows violating record invariants (synonym without accepted id, unknown
/// status, dangling references, duplicates) are quarantined with a warning;
/// a missing column or a row with the wrong field count fails the load.
pub fn load_backbone<R: Read>(source: R) -> Result<(TaxonomyIndex, LoadReport), TaxonomyError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let width = headers.len();
    let mut col = HashMap::new();
    for name in REQUIRED_COLUMNS {
        let pos = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| TaxonomyError::MissingColumn(name.to_string()))?;
        col.insert(name, pos);
    }

    let mut rows = Vec::new();
    let mut quarantined = Vec::new();
    for result in reader.records() {
        let row = result?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != width {
            return Err(TaxonomyError::MalformedRow {
                line,
                reason: format!("expected {width} fields, found {}", row.len()),
            });
        }
        let field = |name: &str| row.get(col[name]).unwrap_or("").trim();

        let taxon_id = field("taxonID").to_string();
        let mut quarantine = |reason: String| {
            quarantined.push(QuarantinedRow {
                line,
                taxon_id: taxon_id.clone(),
                reason,
            })
        };
        if taxon_id.is_empty() {
            quarantine("empty taxonID".into());
            continue;
        }
        let canonical = field("canonicalName");
        if canonical.is_empty() {
            quarantine("empty canonicalName".into());
            continue;
        }
        let status = match TaxonStatus::parse(field("taxonomicStatus")) {
            Some(s) => s,
            None => {
                quarantine(format!(
                    "unknown taxonomicStatus {:?}",
                    field("taxonomicStatus")
                ));
                continue;
            }
        };
        let accepted_id = optional_id(field("acceptedNameUsageID"));
        match (status, &accepted_id) {
            (TaxonStatus::Synonym, None) => {
                quarantine("synonym without acceptedNameUsageID".into());
                continue;
            }
            (TaxonStatus::Accepted, Some(acc)) if acc.0 != taxon_id => {
                quarantine(format!("accepted record points at {acc}"));
                continue;
            }
            _ => {}
        }
        rows.push((
            line,
            TaxonRecord {
                taxon_id: TaxonId(taxon_id.clone()),
                scientific_name: field("scientificName").to_string(),
                canonical_name: canonical.split_whitespace().collect::<Vec<_>>().join(" "),
                rank: TaxonRank::parse(field("taxonRank")),
                status,
                accepted_id,
                parent_id: optional_id(field("parentNameUsageID")),
            },
        ));
    }

    let (index, mut dangling) = TaxonomyIndex::build(rows);
    quarantined.append(&mut dangling);
    quarantined.sort_by_key(|q| q.line);
    for q in &quarantined {
        warn!(line = q.line, taxon_id = %q.taxon_id, reason = %q.reason, "quarantined backbone row");
    }
    let report = LoadReport {
        loaded: index.len(),
        quarantined,
    };
    Ok((index, report))
}
