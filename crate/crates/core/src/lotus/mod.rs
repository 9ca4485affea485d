//! Organism→chemical pairs from the LOTUS collection, read from an offline
//! dump or a SPARQL endpoint.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::extraction::{normalize_chemical_name, ChemicalName};
use crate::literature::{DocumentRef, Request, Transport, TransportError};
use crate::taxonomy::normalize_name;

pub const QUERY_TEMPLATE: &str = include_str!("../../queries/lotus_by_taxon_name.v1.rq");
pub const QUERY_TEMPLATE_TAG: &str = "lotus_by_taxon_name.v1";

pub const DUMP_COLUMNS: [&str; 6] = [
    "organism_name",
    "chemical_label",
    "structure_id",
    "reference_doi",
    "reference_pmid",
    "reference_year",
];

#[derive(Debug, Error)]
pub enum LotusError {
    #[error("LOTUS source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("LOTUS dump is missing column {0}")]
    MissingColumn(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LotusRelation {
    pub organism_name: String,
    pub chemical: ChemicalName,
    pub structure_id: Option<String>,
    pub reference: DocumentRef,
    pub reference_year: Option<i32>,
}

impl LotusRelation {
    fn dedup_key(&self) -> (String, String, String) {
        (
            normalize_name(&self.organism_name),
            self.chemical.key.clone(),
            self.reference.key(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LotusFetch {
    pub relations: Vec<LotusRelation>,
    /// Records skipped because a required field was missing or invalid.
    pub malformed: usize,
}

fn build_relation(
    organism: &str,
    chemical: &str,
    structure_id: Option<&str>,
    doi: Option<&str>,
    pmid: Option<&str>,
    year: Option<&str>,
) -> Option<LotusRelation> {
    let organism = organism.split_whitespace().collect::<Vec<_>>().join(" ");
    if organism.is_empty() {
        return None;
    }
    let chemical = normalize_chemical_name(chemical).ok()?;
    fn nonempty(s: Option<&str>) -> Option<&str> {
        s.map(str::trim).filter(|s| !s.is_empty())
    }
    let pmid = match nonempty(pmid) {
        Some(p) => Some(p.parse::<u64>().ok()?),
        None => None,
    };
    let reference = DocumentRef::new(pmid, nonempty(doi).map(String::from)).ok()?;
    let reference_year = match nonempty(year) {
        // SPARQL dates come as 1964-01-01T00:00:00Z.
        Some(y) => Some(y.get(..4).unwrap_or(y).parse::<i32>().ok()?),
        None => None,
    };
    Some(LotusRelation {
        organism_name: organism,
        chemical,
        structure_id: nonempty(structure_id).map(String::from),
        reference,
        reference_year,
    })
}

/// The whole dump held in memory, indexed by normalized organism name.
#[derive(Debug, Clone, Default)]
pub struct LotusDump {
    by_organism: BTreeMap<String, Vec<LotusRelation>>,
    pub malformed: usize,
}

impl LotusDump {
    /// Tab-separated with a header naming [`DUMP_COLUMNS`].
    pub fn read<R: Read>(reader: R) -> Result<Self, LotusError> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .quoting(false)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut idx = [0usize; 6];
        for (i, col) in DUMP_COLUMNS.iter().enumerate() {
            idx[i] = headers
                .iter()
                .position(|h| h.trim() == *col)
                .ok_or_else(|| LotusError::MissingColumn(col.to_string()))?;
        }
        let mut dump = Self::default();
        for (n, record) in rdr.records().enumerate() {
            let record = record?;
            let get = |i: usize| record.get(idx[i]);
            match build_relation(
                get(0).unwrap_or_default(),
                get(1).unwrap_or_default(),
                get(2),
                get(3),
                get(4),
                get(5),
            ) {
                Some(rel) => dump.insert(rel),
                None => {
                    warn!(line = n + 2, "malformed LOTUS row skipped");
                    dump.malformed += 1;
                }
            }
        }
        Ok(dump)
    }

    pub fn load(path: &Path) -> Result<Self, LotusError> {
        let file = std::fs::File::open(path)
            .map_err(|e| LotusError::SourceUnavailable(format!("{}: {e}", path.display())))?;
        Self::read(file)
    }

    pub fn insert(&mut self, relation: LotusRelation) {
        self.by_organism
            .entry(normalize_name(&relation.organism_name))
            .or_default()
            .push(relation);
    }

    pub fn len(&self) -> usize {
        self.by_organism.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> Vec<LotusRelation> {
        dedup(self.by_organism.values().flatten().cloned().collect())
    }

    pub fn lookup(&self, names: &BTreeSet<String>) -> Vec<LotusRelation> {
        let keys: BTreeSet<String> = names.iter().map(|n| normalize_name(n)).collect();
        dedup(
            keys.iter()
                .filter_map(|k| self.by_organism.get(k))
                .flatten()
                .cloned()
                .collect(),
        )
    }

    /// Writes the dump format [`LotusDump::read`] accepts.
    pub fn write_relations<W: std::io::Write>(
        relations: &[LotusRelation],
        mut out: W,
    ) -> std::io::Result<()> {
        writeln!(out, "{}", DUMP_COLUMNS.join("\t"))?;
        for r in relations {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.organism_name,
                r.chemical.display,
                r.structure_id.as_deref().unwrap_or(""),
                r.reference.doi.as_deref().unwrap_or(""),
                r.reference.pmid.map(|p| p.to_string()).unwrap_or_default(),
                r.reference_year.map(|y| y.to_string()).unwrap_or_default(),
            )?;
        }
        Ok(())
    }
}

fn dedup(mut relations: Vec<LotusRelation>) -> Vec<LotusRelation> {
    relations.sort();
    let mut seen = BTreeSet::new();
    relations.retain(|r| seen.insert(r.dedup_key()));
    relations
}

/// Renders the query template for a name set.
pub fn render_query(names: &BTreeSet<String>) -> String {
    let values = names
        .iter()
        .map(|n| format!("\"{}\"", n.replace('\\', "\\\\").replace('"', "\\\"")))
        .collect::<Vec<_>>()
        .join(" ");
    QUERY_TEMPLATE.replace("{{names}}", &values)
}

/// Parses SPARQL 1.1 JSON results produced by [`QUERY_TEMPLATE`].
pub fn parse_sparql_results(body: &str) -> Result<LotusFetch, LotusError> {
    let value: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| LotusError::SourceUnavailable(format!("invalid SPARQL JSON: {e}")))?;
    let bindings = value["results"]["bindings"]
        .as_array()
        .ok_or_else(|| LotusError::SourceUnavailable("SPARQL JSON has no bindings".into()))?;
    let mut out = LotusFetch::default();
    for b in bindings {
        let get = |k: &str| b[k]["value"].as_str();
        match build_relation(
            get("taxon_name").unwrap_or_default(),
            get("compound_label").unwrap_or_default(),
            get("structure_id"),
            get("doi"),
            get("pmid"),
            get("pub_date"),
        ) {
            Some(rel) => out.relations.push(rel),
            None => out.malformed += 1,
        }
    }
    out.relations = dedup(out.relations);
    Ok(out)
}

pub struct SparqlLotus {
    endpoint: String,
    transport: Arc<dyn Transport>,
}

impl SparqlLotus {
    pub fn new(endpoint: &str, transport: Arc<dyn Transport>) -> Self {
        Self {
            endpoint: endpoint.to_string(),
            transport,
        }
    }

    pub fn fetch(&self, names: &BTreeSet<String>) -> Result<LotusFetch, LotusError> {
        if names.is_empty() {
            return Ok(LotusFetch::default());
        }
        let req = Request::new(self.endpoint.clone())
            .param("query", render_query(names))
            .param("format", "json");
        let mut fetched = parse_sparql_results(&self.transport.get(&req)?)?;
        let wanted: BTreeSet<String> = names.iter().map(|n| normalize_name(n)).collect();
        fetched
            .relations
            .retain(|r| wanted.contains(&normalize_name(&r.organism_name)));
        Ok(fetched)
    }
}

/// Where LOTUS pairs come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LotusSourceConfig {
    Dump { path: PathBuf },
    Endpoint { url: String },
    None,
}

pub enum LotusSource {
    Dump(LotusDump),
    Endpoint(SparqlLotus),
    None,
}

impl LotusSource {
    /// Exact (normalized) organism-name lookup, deduplicated.
    pub fn fetch_relations(&self, names: &BTreeSet<String>) -> Result<LotusFetch, LotusError> {
        match self {
            LotusSource::Dump(d) => Ok(LotusFetch {
                relations: d.lookup(names),
                malformed: 0,
            }),
            LotusSource::Endpoint(s) => s.fetch(names),
            LotusSource::None => Ok(LotusFetch::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub year_histogram: BTreeMap<i32, usize>,
    pub unknown_year: usize,
    pub total: usize,
    pub with_pmid: usize,
    /// `with_pmid / total`; absent for an empty input.
    pub pmid_fraction: Option<f64>,
}

pub fn reference_stats(relations: &[LotusRelation]) -> ReferenceStats {
    let mut year_histogram = BTreeMap::new();
    let mut unknown_year = 0;
    let mut with_pmid = 0;
    for r in relations {
        match r.reference_year {
            Some(y) => *year_histogram.entry(y).or_insert(0) += 1,
            None => unknown_year += 1,
        }
        if r.reference.pmid.is_some() {
            with_pmid += 1;
        }
    }
    let total = relations.len();
    ReferenceStats {
        year_histogram,
        unknown_year,
        total,
        with_pmid,
        pmid_fraction: (total > 0).then(|| with_pmid as f64 / total as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DUMP: &str = "organism_name\tchemical_label\tstructure_id\treference_doi\treference_pmid\treference_year
Cephalosporium acremonium\tCephalosporin C\tHOKIDJSKDBPKTQ-GLXFQSAKSA-N\t10.1042/bj0890114\t14126054\t1964
Cephalosporium acremonium\tCephalosporin C.\t\t10.1042/bj0890114\t14126054\t1964
Penicillium chrysogenum\tPenicillin G\t\t10.1000/x\t\t1945
Broken row\t\t\t\t\t
";

    fn names(list: &[&str]) -> BTreeSet<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn dump_lookup_dedups_and_counts_malformed() {
        let dump = LotusDump::read(DUMP.as_bytes()).unwrap();
        assert_eq!(dump.malformed, 1);
        let strictum = names(&[
            "Sarocladium strictum",
            "Cephalosporium acremonium",
            "Hyalopus acremonium",
            "Acremonium strictum",
        ]);
        let rels = dump.lookup(&strictum);
        assert_eq!(rels.len(), 1);
        assert_eq!(rels[0].chemical.key, "cephalosporin c");
        assert_eq!(rels[0].reference.pmid, Some(14126054));
        assert!(dump.lookup(&names(&["Nobody here"])).is_empty());
    }

    #[test]
    fn missing_column_is_reported() {
        let err = LotusDump::read("organism_name\tchemical_label\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LotusError::MissingColumn(c) if c == "structure_id"));
    }

    #[test]
    fn stats_fraction_and_bins() {
        assert_eq!(reference_stats(&[]).pmid_fraction, None);
        let dump = LotusDump::read(DUMP.as_bytes()).unwrap();
        let s = reference_stats(&dump.all());
        assert_eq!(s.total, 2);
        assert_eq!(s.pmid_fraction, Some(0.5));
        assert_eq!(s.year_histogram.len(), 2);
    }

    #[test]
    fn query_lists_every_name() {
        let q = render_query(&names(&["A b", "C \"d\""]));
        assert!(q.contains("VALUES ?taxon_name { \"A b\" \"C \\\"d\\\"\" }"));
    }
}
